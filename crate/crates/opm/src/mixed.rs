//! Kalman-style filtering for a state that is partially random and partially
//! deterministic.
//!
//! The state splits into a random block `x` with a Gaussian law and a
//! deterministic block `t` described by a normal possibility function. The
//! joint description is kept in conditional form: `t` carries a mean and
//! spread, and `x | t` is Gaussian with a mean linear in `t`. Prediction and
//! update stay closed-form in these five components and agree with a
//! standard Kalman filter on the stacked state that treats `t` as random;
//! the update additionally produces a dimensionless marginal likelihood in
//! [0, 1] used to weight hypotheses.
//!
//! One term of the predicted `x`-covariance is printed ambiguously in the
//! usual derivations; the form used here (`F_x P^x F_x'`) is the one that
//! reproduces the joint Kalman recursion exactly, which the test suite
//! checks against an independent implementation.

use nalgebra::{DMatrix, DVector};

use crate::error::{OpmError, Result};
use crate::gaussian::conditional_decompose;
use crate::linalg::{
    check_spd, check_symmetric, cholesky_spd, mahalanobis_sq, spd_determinant, spd_inverse,
    symmetrize,
};

/// Conditionally-Gaussian outer probability measure over a mixed state:
/// possibility parameters for the deterministic block and a Gaussian law,
/// linear in the deterministic block, for the random block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussianOpm {
    /// Mean of the deterministic block.
    m_theta: DVector<f64>,
    /// Spread of the deterministic block.
    p_theta: DMatrix<f64>,
    /// Regression of the random block on the deterministic block.
    c_xtheta: DMatrix<f64>,
    /// Mean of the random block at `t = m_theta`.
    m_x: DVector<f64>,
    /// Conditional covariance of the random block.
    p_x: DMatrix<f64>,
}

impl ConditionalGaussianOpm {
    pub fn new(
        m_theta: DVector<f64>,
        p_theta: DMatrix<f64>,
        c_xtheta: DMatrix<f64>,
        m_x: DVector<f64>,
        p_x: DMatrix<f64>,
    ) -> Result<Self> {
        let t_dim = m_theta.len();
        let x_dim = m_x.len();
        if x_dim == 0 {
            return Err(OpmError::InvalidArgument(
                "random block must have positive dimension".into(),
            ));
        }
        if p_theta.nrows() != t_dim || p_theta.ncols() != t_dim {
            return Err(OpmError::DimensionMismatch("p_theta".into()));
        }
        if c_xtheta.nrows() != x_dim || c_xtheta.ncols() != t_dim {
            return Err(OpmError::DimensionMismatch("c_xtheta".into()));
        }
        if p_x.nrows() != x_dim || p_x.ncols() != x_dim {
            return Err(OpmError::DimensionMismatch("p_x".into()));
        }
        if t_dim > 0 {
            check_spd(&p_theta, "p_theta")?;
        }
        check_spd(&p_x, "p_x")?;
        Ok(Self {
            m_theta,
            p_theta,
            c_xtheta,
            m_x,
            p_x,
        })
    }

    /// Weakly informative prior: zero means, identity spreads, no coupling.
    pub fn standard_prior(x_dim: usize, theta_dim: usize) -> Self {
        Self {
            m_theta: DVector::zeros(theta_dim),
            p_theta: DMatrix::identity(theta_dim, theta_dim),
            c_xtheta: DMatrix::zeros(x_dim, theta_dim),
            m_x: DVector::zeros(x_dim),
            p_x: DMatrix::identity(x_dim, x_dim),
        }
    }

    pub fn x_dim(&self) -> usize {
        self.m_x.len()
    }

    pub fn theta_dim(&self) -> usize {
        self.m_theta.len()
    }

    pub fn m_theta(&self) -> &DVector<f64> {
        &self.m_theta
    }

    pub fn p_theta(&self) -> &DMatrix<f64> {
        &self.p_theta
    }

    pub fn c_xtheta(&self) -> &DMatrix<f64> {
        &self.c_xtheta
    }

    pub fn m_x(&self) -> &DVector<f64> {
        &self.m_x
    }

    pub fn p_x(&self) -> &DMatrix<f64> {
        &self.p_x
    }

    /// Stacked mean `(m_x; m_theta)` and joint covariance with blocks
    /// `P_xx = P_x + C P_t C'`, `P_xt = C P_t` and `P_tt = P_t`.
    pub fn recover_joint(&self) -> (DVector<f64>, DMatrix<f64>) {
        let x_dim = self.x_dim();
        let t_dim = self.theta_dim();
        let n = x_dim + t_dim;

        let mut mean = DVector::zeros(n);
        mean.rows_mut(0, x_dim).copy_from(&self.m_x);
        mean.rows_mut(x_dim, t_dim).copy_from(&self.m_theta);

        let p_xt = &self.c_xtheta * &self.p_theta;
        let p_xx = symmetrize(&(&self.p_x + &self.c_xtheta * p_xt.transpose()));

        let mut cov = DMatrix::zeros(n, n);
        cov.view_mut((0, 0), (x_dim, x_dim)).copy_from(&p_xx);
        cov.view_mut((0, x_dim), (x_dim, t_dim)).copy_from(&p_xt);
        cov.view_mut((x_dim, 0), (t_dim, x_dim))
            .copy_from(&p_xt.transpose());
        cov.view_mut((x_dim, x_dim), (t_dim, t_dim))
            .copy_from(&self.p_theta);
        (mean, symmetrize(&cov))
    }

    /// Inverse of [`ConditionalGaussianOpm::recover_joint`].
    pub fn from_joint(mean: &DVector<f64>, cov: &DMatrix<f64>, x_dim: usize) -> Result<Self> {
        let (marginal, cond) = conditional_decompose(mean, cov, x_dim)?;
        Self::new(
            marginal.mean().clone(),
            marginal.spread().clone(),
            cond.gain.clone(),
            cond.base.clone(),
            cond.cov.clone(),
        )
    }
}

/// Block-structured model of the mixed linear-Gaussian system.
///
/// The transition matrix is block upper triangular over `(x, t)`, the
/// deterministic block evolving autonomously, and the process noise
/// covariance `Q = G G'` is stored in blocks. The observation acts on the
/// random block only.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    f_x: DMatrix<f64>,
    f_xtheta: DMatrix<f64>,
    f_theta: DMatrix<f64>,
    q_xx: DMatrix<f64>,
    q_xtheta: DMatrix<f64>,
    q_thetatheta: DMatrix<f64>,
    h: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl ModelMatrices {
    /// Builds the model from explicit noise-covariance blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn from_q_blocks(
        f_x: DMatrix<f64>,
        f_xtheta: DMatrix<f64>,
        f_theta: DMatrix<f64>,
        q_xx: DMatrix<f64>,
        q_xtheta: DMatrix<f64>,
        q_thetatheta: DMatrix<f64>,
        h: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let x_dim = f_x.nrows();
        let t_dim = f_theta.nrows();
        if f_x.ncols() != x_dim || f_theta.ncols() != t_dim {
            return Err(OpmError::DimensionMismatch("transition blocks".into()));
        }
        if f_xtheta.nrows() != x_dim || f_xtheta.ncols() != t_dim {
            return Err(OpmError::DimensionMismatch("cross transition block".into()));
        }
        if q_xx.nrows() != x_dim
            || q_xx.ncols() != x_dim
            || q_xtheta.nrows() != x_dim
            || q_xtheta.ncols() != t_dim
            || q_thetatheta.nrows() != t_dim
            || q_thetatheta.ncols() != t_dim
        {
            return Err(OpmError::DimensionMismatch(
                "noise covariance blocks".into(),
            ));
        }
        if h.ncols() != x_dim {
            return Err(OpmError::DimensionMismatch(
                "observation matrix must act on the random block".into(),
            ));
        }
        if r.nrows() != h.nrows() {
            return Err(OpmError::DimensionMismatch("observation noise".into()));
        }
        check_symmetric(&q_xx, "q_xx")?;
        if t_dim > 0 {
            check_spd(&q_thetatheta, "q_thetatheta")?;
        }
        check_spd(&r, "r")?;
        Ok(Self {
            f_x,
            f_xtheta,
            f_theta,
            q_xx,
            q_xtheta,
            q_thetatheta,
            h,
            r,
        })
    }

    /// Builds the model from a noise-shaping matrix `G`, with `Q = G G'`.
    pub fn from_noise_shaping(
        f_x: DMatrix<f64>,
        f_xtheta: DMatrix<f64>,
        f_theta: DMatrix<f64>,
        g: &DMatrix<f64>,
        h: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let x_dim = f_x.nrows();
        let t_dim = f_theta.nrows();
        if g.nrows() != x_dim + t_dim {
            return Err(OpmError::DimensionMismatch(format!(
                "noise shaping has {} rows vs state dimension {}",
                g.nrows(),
                x_dim + t_dim
            )));
        }
        let q = g * g.transpose();
        Self::from_q_blocks(
            f_x,
            f_xtheta,
            f_theta,
            q.view((0, 0), (x_dim, x_dim)).into_owned(),
            q.view((0, x_dim), (x_dim, t_dim)).into_owned(),
            q.view((x_dim, x_dim), (t_dim, t_dim)).into_owned(),
            h,
            r,
        )
    }

    pub fn x_dim(&self) -> usize {
        self.f_x.nrows()
    }

    pub fn theta_dim(&self) -> usize {
        self.f_theta.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Full transition matrix over the stacked state `(x; t)`.
    pub fn joint_transition(&self) -> DMatrix<f64> {
        let (dx, dt) = (self.x_dim(), self.theta_dim());
        let mut f = DMatrix::zeros(dx + dt, dx + dt);
        f.view_mut((0, 0), (dx, dx)).copy_from(&self.f_x);
        f.view_mut((0, dx), (dx, dt)).copy_from(&self.f_xtheta);
        f.view_mut((dx, dx), (dt, dt)).copy_from(&self.f_theta);
        f
    }

    /// Full process-noise covariance over the stacked state.
    pub fn joint_noise_cov(&self) -> DMatrix<f64> {
        let (dx, dt) = (self.x_dim(), self.theta_dim());
        let mut q = DMatrix::zeros(dx + dt, dx + dt);
        q.view_mut((0, 0), (dx, dx)).copy_from(&self.q_xx);
        q.view_mut((0, dx), (dx, dt)).copy_from(&self.q_xtheta);
        q.view_mut((dx, 0), (dt, dx))
            .copy_from(&self.q_xtheta.transpose());
        q.view_mut((dx, dx), (dt, dt)).copy_from(&self.q_thetatheta);
        q
    }

    /// Observation matrix over the stacked state: the deterministic block is
    /// never observed directly.
    pub fn joint_observation(&self) -> DMatrix<f64> {
        let (dx, dt) = (self.x_dim(), self.theta_dim());
        let mut h = DMatrix::zeros(self.obs_dim(), dx + dt);
        h.view_mut((0, 0), (self.obs_dim(), dx)).copy_from(&self.h);
        h
    }
}

/// Gains produced while predicting one step ahead.
#[derive(Debug, Clone)]
pub struct PredictionGains {
    /// Smoother-style gain of the previous deterministic block on the
    /// predicted one.
    pub k_theta_pred: DMatrix<f64>,
    /// Effective coupling of the previous deterministic block into the
    /// predicted random block.
    pub f_tilde_xtheta: DMatrix<f64>,
}

/// Gains and evidence produced by assimilating one observation.
#[derive(Debug, Clone)]
pub struct UpdateGains {
    /// Observation matrix composed with the predicted regression.
    pub h_tilde: DMatrix<f64>,
    /// Gain of the deterministic block on the innovation.
    pub k_theta: DMatrix<f64>,
    /// Gain of the random block on the innovation.
    pub k_x: DMatrix<f64>,
    /// Innovation covariance of the random block.
    pub s_x: DMatrix<f64>,
    /// Dimensionless marginal likelihood in [0, 1].
    pub likelihood: f64,
}

/// All gains of a full predict-then-update step.
#[derive(Debug, Clone)]
pub struct GainSet {
    pub k_theta_pred: DMatrix<f64>,
    pub f_tilde_xtheta: DMatrix<f64>,
    pub h_tilde: DMatrix<f64>,
    pub k_theta: DMatrix<f64>,
    pub k_x: DMatrix<f64>,
    pub s_x: DMatrix<f64>,
    pub likelihood: f64,
}

/// Propagates the conditional-form state one step through the transition
/// model. Covariance outputs are symmetrized against floating-point drift.
pub fn predict(
    state: &ConditionalGaussianOpm,
    model: &ModelMatrices,
) -> Result<(ConditionalGaussianOpm, PredictionGains)> {
    if state.x_dim() != model.x_dim() || state.theta_dim() != model.theta_dim() {
        return Err(OpmError::DimensionMismatch(
            "state and model block dimensions differ".into(),
        ));
    }
    let t_dim = state.theta_dim();

    let m_theta_pred = &model.f_theta * &state.m_theta;
    let p_theta_pred = symmetrize(
        &(&model.f_theta * &state.p_theta * model.f_theta.transpose() + &model.q_thetatheta),
    );
    let p_theta_pred_inv = if t_dim > 0 {
        spd_inverse(&p_theta_pred, "predicted p_theta")?
    } else {
        DMatrix::zeros(0, 0)
    };
    let k_theta_pred = &state.p_theta * model.f_theta.transpose() * &p_theta_pred_inv;

    // W = Q_xt Q_tt^-1, the regression of the x-noise on the t-noise.
    let w = if t_dim > 0 {
        &model.q_xtheta * spd_inverse(&model.q_thetatheta, "q_thetatheta")?
    } else {
        DMatrix::zeros(state.x_dim(), 0)
    };

    let coupled = &model.f_x * &state.c_xtheta + &model.f_xtheta;
    let f_tilde = &coupled - &w * &model.f_theta;
    let c_pred = &coupled * &k_theta_pred
        + &w * (DMatrix::identity(t_dim, t_dim) - &model.f_theta * &k_theta_pred);
    let m_x_pred = &model.f_xtheta * &state.m_theta + &model.f_x * &state.m_x;

    let shrunk_p_theta =
        (DMatrix::identity(t_dim, t_dim) - &k_theta_pred * &model.f_theta) * &state.p_theta;
    let p_x_pred = symmetrize(
        &(&f_tilde * shrunk_p_theta * f_tilde.transpose()
            + &model.f_x * &state.p_x * model.f_x.transpose()
            + &model.q_xx
            - &w * model.q_xtheta.transpose()),
    );

    let predicted =
        ConditionalGaussianOpm::new(m_theta_pred, p_theta_pred, c_pred, m_x_pred, p_x_pred)?;
    Ok((
        predicted,
        PredictionGains {
            k_theta_pred,
            f_tilde_xtheta: f_tilde,
        },
    ))
}

/// Assimilates one observation into a predicted state, returning the updated
/// state together with the gains and the marginal likelihood of the
/// observation.
pub fn update(
    state: &ConditionalGaussianOpm,
    y: &DVector<f64>,
    model: &ModelMatrices,
) -> Result<(ConditionalGaussianOpm, UpdateGains)> {
    if state.x_dim() != model.x_dim() || state.theta_dim() != model.theta_dim() {
        return Err(OpmError::DimensionMismatch(
            "state and model block dimensions differ".into(),
        ));
    }
    if y.len() != model.obs_dim() {
        return Err(OpmError::DimensionMismatch(format!(
            "observation of length {} vs {}",
            y.len(),
            model.obs_dim()
        )));
    }
    let x_dim = state.x_dim();
    let t_dim = state.theta_dim();

    let s_x = symmetrize(&(&model.h * &state.p_x * model.h.transpose() + &model.r));
    let s_x_chol = cholesky_spd(&s_x, "innovation covariance")?;
    let h_tilde = &model.h * &state.c_xtheta;

    let s_full = symmetrize(&(&h_tilde * &state.p_theta * h_tilde.transpose() + &s_x));
    let k_theta =
        &state.p_theta * h_tilde.transpose() * spd_inverse(&s_full, "full innovation covariance")?;
    let k_x = &state.p_x * model.h.transpose() * s_x_chol.inverse();

    let innovation = y - &model.h * &state.m_x;
    let m_theta = &state.m_theta + &k_theta * &innovation;
    let p_theta =
        symmetrize(&((DMatrix::identity(t_dim, t_dim) - &k_theta * &h_tilde) * &state.p_theta));
    let c_new = (DMatrix::identity(x_dim, x_dim) - &k_x * &model.h) * &state.c_xtheta;
    let m_x = &state.m_x + (&k_x + &c_new * &k_theta) * &innovation;
    let p_x = symmetrize(&((DMatrix::identity(x_dim, x_dim) - &k_x * &model.h) * &state.p_x));

    let det_r = spd_determinant(&model.r, "r")?;
    let det_s = s_x_chol.determinant();
    let exponent = mahalanobis_sq(&innovation, &s_full, "full innovation covariance")?;
    // The prefactor and the exponential are both at most 1; the min guards
    // against the product creeping a few ulps above 1.
    let likelihood = ((det_r / det_s).sqrt() * (-0.5 * exponent).exp()).min(1.0);

    let updated = ConditionalGaussianOpm::new(m_theta, p_theta, c_new, m_x, p_x)?;
    Ok((
        updated,
        UpdateGains {
            h_tilde,
            k_theta,
            k_x,
            s_x,
            likelihood,
        },
    ))
}

/// One full predict-then-update step, collecting every gain.
pub fn step(
    state: &ConditionalGaussianOpm,
    y: &DVector<f64>,
    model: &ModelMatrices,
) -> Result<(ConditionalGaussianOpm, GainSet)> {
    let (predicted, pg) = predict(state, model)?;
    let (updated, ug) = update(&predicted, y, model)?;
    Ok((
        updated,
        GainSet {
            k_theta_pred: pg.k_theta_pred,
            f_tilde_xtheta: pg.f_tilde_xtheta,
            h_tilde: ug.h_tilde,
            k_theta: ug.k_theta,
            k_x: ug.k_x,
            s_x: ug.s_x,
            likelihood: ug.likelihood,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_model(delta: f64) -> ModelMatrices {
        let g = DMatrix::from_column_slice(2, 1, &[delta * delta / 2.0, delta]);
        ModelMatrices::from_noise_shaping(
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, delta),
            DMatrix::identity(1, 1),
            &g,
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap()
    }

    #[test]
    fn identity_dynamics_with_small_noise_inflates_covariances_only() {
        let eps = 1e-3;
        let model = ModelMatrices::from_q_blocks(
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, eps),
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, eps),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        let state = ConditionalGaussianOpm::standard_prior(1, 1);
        let (pred, _) = predict(&state, &model).unwrap();
        assert_eq!(pred.m_x()[0], 0.0);
        assert_eq!(pred.m_theta()[0], 0.0);
        assert_relative_eq!(pred.p_x()[(0, 0)], 1.0 + eps, epsilon = 1e-12);
        assert_relative_eq!(pred.p_theta()[(0, 0)], 1.0 + eps, epsilon = 1e-12);
        assert_eq!(pred.c_xtheta()[(0, 0)], 0.0);
    }

    #[test]
    fn joint_propagation_identity_holds() {
        // recover_joint(predict(s)) = F recover_joint(s) F' + Q.
        let model = scalar_model(0.1);
        let state = ConditionalGaussianOpm::new(
            DVector::from_element(1, 0.4),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 0.3),
            DVector::from_element(1, -1.0),
            DMatrix::from_element(1, 1, 1.5),
        )
        .unwrap();
        let (pred, _) = predict(&state, &model).unwrap();
        let (m_pred, p_pred) = pred.recover_joint();

        let f = model.joint_transition();
        let q = model.joint_noise_cov();
        let (m0, p0) = state.recover_joint();
        let m_expected = &f * m0;
        let p_expected = &f * p0 * f.transpose() + q;
        assert_relative_eq!(m_pred, m_expected, epsilon = 1e-9);
        assert_relative_eq!(p_pred, p_expected, epsilon = 1e-9);
    }

    #[test]
    fn zero_innovation_keeps_means_and_bounds_likelihood() {
        let model = scalar_model(0.1);
        let state = ConditionalGaussianOpm::standard_prior(1, 1);
        let (pred, _) = predict(&state, &model).unwrap();
        let y = DVector::from_element(1, pred.m_x()[0]);
        let (updated, gains) = update(&pred, &y, &model).unwrap();
        assert_relative_eq!(updated.m_x()[0], pred.m_x()[0], epsilon = 1e-14);
        assert_relative_eq!(updated.m_theta()[0], pred.m_theta()[0], epsilon = 1e-14);
        let expected = (model.r()[(0, 0)] / gains.s_x[(0, 0)]).sqrt();
        assert_relative_eq!(gains.likelihood, expected, epsilon = 1e-14);
        assert!(gains.likelihood <= 1.0);
    }

    #[test]
    fn likelihood_prefactor_is_one_when_r_equals_innovation_covariance() {
        // Shrink the conditional covariance and coupling to zero limits:
        // use a tiny p_x and no coupling, so s_x -> r and L -> exp term.
        let model = scalar_model(0.1);
        let state = ConditionalGaussianOpm::new(
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1e-14),
            DMatrix::zeros(1, 1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1e-14),
        )
        .unwrap();
        let y = DVector::from_element(1, 0.3);
        let (_, gains) = update(&state, &y, &model).unwrap();
        let expected = (-0.5 * 0.3 * 0.3 / model.r()[(0, 0)]).exp();
        assert_relative_eq!(gains.likelihood, expected, epsilon = 1e-9);
    }

    #[test]
    fn recover_joint_simple_case() {
        let state = ConditionalGaussianOpm::new(
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 0.5),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let (_, p) = state.recover_joint();
        // P_xt = C P_t = 1.0, P_xx = P_x + C P_xt' = 1 + 0.5 = 1.5.
        assert_relative_eq!(p[(0, 1)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(p[(0, 0)], 1.5, epsilon = 1e-14);
        assert_relative_eq!(p[(1, 1)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn recover_joint_with_zero_coupling_is_block_diagonal() {
        let state = ConditionalGaussianOpm::standard_prior(2, 1);
        let (_, p) = state.recover_joint();
        assert_eq!(p[(0, 2)], 0.0);
        assert_eq!(p[(1, 2)], 0.0);
    }

    #[test]
    fn joint_roundtrip_reproduces_components() {
        let state = ConditionalGaussianOpm::new(
            DVector::from_vec(vec![0.3, -0.2]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.9]),
            DMatrix::from_row_slice(1, 2, &[0.4, -0.6]),
            DVector::from_element(1, 2.0),
            DMatrix::from_element(1, 1, 0.8),
        )
        .unwrap();
        let (mean, cov) = state.recover_joint();
        let back = ConditionalGaussianOpm::from_joint(&mean, &cov, 1).unwrap();
        assert_relative_eq!(back.m_theta(), state.m_theta(), epsilon = 1e-12);
        assert_relative_eq!(back.p_theta(), state.p_theta(), epsilon = 1e-12);
        assert_relative_eq!(back.c_xtheta(), state.c_xtheta(), epsilon = 1e-12);
        assert_relative_eq!(back.m_x(), state.m_x(), epsilon = 1e-12);
        assert_relative_eq!(back.p_x(), state.p_x(), epsilon = 1e-12);
    }

    #[test]
    fn theta_dimension_zero_reduces_to_textbook_kalman() {
        let model = ModelMatrices::from_q_blocks(
            DMatrix::from_element(1, 1, 0.9),
            DMatrix::zeros(1, 0),
            DMatrix::zeros(0, 0),
            DMatrix::from_element(1, 1, 0.2),
            DMatrix::zeros(1, 0),
            DMatrix::zeros(0, 0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        let state = ConditionalGaussianOpm::standard_prior(1, 0);
        let (pred, _) = predict(&state, &model).unwrap();
        assert_relative_eq!(pred.p_x()[(0, 0)], 0.9 * 0.9 + 0.2, epsilon = 1e-14);

        let y = DVector::from_element(1, 0.5);
        let (upd, gains) = update(&pred, &y, &model).unwrap();
        let s = pred.p_x()[(0, 0)] + 0.5;
        let k = pred.p_x()[(0, 0)] / s;
        assert_relative_eq!(gains.k_x[(0, 0)], k, epsilon = 1e-14);
        assert_relative_eq!(upd.m_x()[0], k * 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            upd.p_x()[(0, 0)],
            (1.0 - k) * pred.p_x()[(0, 0)],
            epsilon = 1e-14
        );
        let expected_l = (0.5f64 / s).sqrt() * (-0.5 * 0.25 / s).exp();
        assert_relative_eq!(gains.likelihood, expected_l, epsilon = 1e-14);
    }

    #[test]
    fn update_rejects_bad_observation_dimension() {
        let model = scalar_model(0.1);
        let state = ConditionalGaussianOpm::standard_prior(1, 1);
        assert!(update(&state, &DVector::zeros(2), &model).is_err());
    }
}
