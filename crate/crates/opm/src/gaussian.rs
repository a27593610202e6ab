//! Closed-form algebra of normal possibility functions and normal densities.
//!
//! A normal possibility function is the density shape without its
//! normalizing constant, so it evaluates to 1 at its mean. Linear transforms
//! and sums of independently-described variables stay in the family with the
//! same parameter arithmetic as covariances; the sum rule is fixed by the
//! sup-convolution identity
//! `sup_u exp(-(u-m)^2/2s) exp(-(x-u-m')^2/2s') = exp(-(x-m-m')^2/2(s+s'))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{OpmError, Result};
use crate::linalg::{check_spd, check_symmetric, cholesky_spd, mahalanobis_sq, symmetrize};

/// A normal possibility function: mean and symmetric positive-definite
/// spread, evaluating to exactly 1 at the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPossibility {
    mean: DVector<f64>,
    spread: DMatrix<f64>,
}

impl GaussianPossibility {
    pub fn new(mean: DVector<f64>, spread: DMatrix<f64>) -> Result<Self> {
        if spread.nrows() != mean.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "mean of length {} vs {}x{} spread",
                mean.len(),
                spread.nrows(),
                spread.ncols()
            )));
        }
        check_spd(&spread, "spread")?;
        Ok(Self { mean, spread })
    }

    /// One-dimensional constructor.
    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mean),
            DMatrix::from_element(1, 1, variance),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn spread(&self) -> &DMatrix<f64> {
        &self.spread
    }

    /// Evaluates `exp(-1/2 (x - mean)' spread^-1 (x - mean))`.
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(OpmError::DimensionMismatch(format!(
                "point of length {} vs dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let d = x - &self.mean;
        let q = mahalanobis_sq(&d, &self.spread, "spread")?;
        Ok((-0.5 * q).exp())
    }

    /// Pushforward through the affine map `x -> A x + b`.
    ///
    /// `A` must have full row rank so the image spread stays positive
    /// definite; rank deficiency leaves the family and is an error.
    pub fn linear_transform(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() {
            return Err(OpmError::DimensionMismatch(format!(
                "{}x{} matrix vs dimension {}",
                a.nrows(),
                a.ncols(),
                self.dim()
            )));
        }
        if b.len() != a.nrows() {
            return Err(OpmError::DimensionMismatch(format!(
                "offset of length {} vs {} rows",
                b.len(),
                a.nrows()
            )));
        }
        let mean = a * &self.mean + b;
        let spread = symmetrize(&(a * &self.spread * a.transpose()));
        // With an SPD input spread, A S A' is SPD exactly when A has full row
        // rank, so the Cholesky check doubles as the rank check.
        cholesky_spd(&spread, "transformed spread (rank-deficient map?)")?;
        Ok(Self { mean, spread })
    }

    /// The possibility function describing the sum of two independently
    /// described variables: means and spreads add.
    pub fn sum_independent(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(OpmError::DimensionMismatch(format!(
                "dimensions {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            mean: &self.mean + &other.mean,
            spread: &self.spread + &other.spread,
        })
    }
}

/// A normal probability density: mean and symmetric positive-definite
/// covariance, with the usual normalizing constant.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianDensity {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        if covariance.nrows() != mean.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "mean of length {} vs {}x{} covariance",
                mean.len(),
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        check_spd(&covariance, "covariance")?;
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Density value at a point.
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(OpmError::DimensionMismatch(format!(
                "point of length {} vs dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let chol = cholesky_spd(&self.covariance, "covariance")?;
        let d = x - &self.mean;
        let q = d.dot(&chol.solve(&d));
        let norm =
            ((2.0 * std::f64::consts::PI).powi(self.dim() as i32) * chol.determinant()).sqrt();
        Ok((-0.5 * q).exp() / norm)
    }
}

/// Conditional law of the leading block given the trailing block of a joint
/// normal: `x | t ~ N(base + gain (t - anchor), cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    /// Mean of the leading block at `t = anchor`.
    pub base: DVector<f64>,
    /// Reference point in the trailing block (its marginal mean).
    pub anchor: DVector<f64>,
    /// Regression gain of the leading block on the trailing block.
    pub gain: DMatrix<f64>,
    /// Conditional covariance (the Schur complement).
    pub cov: DMatrix<f64>,
}

impl ConditionalGaussian {
    pub fn mean_at(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.base + &self.gain * (t - &self.anchor)
    }

    /// Conditional density value of `x` given `t`.
    pub fn eval(&self, x: &DVector<f64>, t: &DVector<f64>) -> Result<f64> {
        GaussianDensity::new(self.mean_at(t), self.cov.clone())?.eval(x)
    }
}

/// Splits a joint normal over stacked blocks `(x, t)` into the marginal over
/// the trailing block (as a normal possibility function) and the conditional
/// law of the leading block given the trailing block.
///
/// The joint covariance is laid out `[[Q_xx, Q_xt], [Q_tx, Q_tt]]` with the
/// leading block of dimension `x_dim`. `Q_tt` must be invertible and the
/// Schur complement `Q_xx - Q_xt Q_tt^-1 Q_tx` positive definite.
pub fn conditional_decompose(
    joint_mean: &DVector<f64>,
    joint_cov: &DMatrix<f64>,
    x_dim: usize,
) -> Result<(GaussianPossibility, ConditionalGaussian)> {
    let n = joint_mean.len();
    if joint_cov.nrows() != n || joint_cov.ncols() != n {
        return Err(OpmError::DimensionMismatch(format!(
            "mean of length {n} vs {}x{} covariance",
            joint_cov.nrows(),
            joint_cov.ncols()
        )));
    }
    if x_dim > n {
        return Err(OpmError::DimensionMismatch(format!(
            "leading block {x_dim} larger than dimension {n}"
        )));
    }
    check_symmetric(joint_cov, "joint covariance")?;
    let t_dim = n - x_dim;

    let m_x = joint_mean.rows(0, x_dim).into_owned();
    let m_t = joint_mean.rows(x_dim, t_dim).into_owned();
    let q_xx = joint_cov.view((0, 0), (x_dim, x_dim)).into_owned();
    let q_xt = joint_cov.view((0, x_dim), (x_dim, t_dim)).into_owned();
    let q_tt = joint_cov.view((x_dim, x_dim), (t_dim, t_dim)).into_owned();

    let q_tt_chol = cholesky_spd(&symmetrize(&q_tt), "trailing block")?;
    // gain = Q_xt Q_tt^-1, via solving Q_tt gain' = Q_tx.
    let gain = q_tt_chol.solve(&q_xt.transpose()).transpose();
    let schur = symmetrize(&(&q_xx - &gain * q_xt.transpose()));
    if x_dim > 0 {
        cholesky_spd(&schur, "Schur complement (invalid joint)")?;
    }

    let marginal = GaussianPossibility::new(m_t, symmetrize(&q_tt))?;
    let conditional = ConditionalGaussian {
        base: m_x,
        anchor: marginal.mean().clone(),
        gain,
        cov: schur,
    };
    Ok((marginal, conditional))
}
