//! Shared test-only oracles, independent of the library's filtering code.
//!
//! The joint Kalman filter here works on the stacked state with the
//! deterministic block treated as random, using nothing from `opm::mixed`
//! beyond plain matrix arithmetic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Textbook Kalman filter state over the stacked state vector.
#[derive(Debug, Clone)]
pub struct JointKalman {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl JointKalman {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn predict(&mut self, f: &DMatrix<f64>, q: &DMatrix<f64>) {
        self.mean = f * &self.mean;
        let p = f * &self.cov * f.transpose() + q;
        self.cov = (&p + p.transpose()) * 0.5;
    }

    pub fn update(&mut self, y: &DVector<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>) {
        let s = h * &self.cov * h.transpose() + r;
        let s_inv = s
            .clone()
            .try_inverse()
            .expect("oracle innovation covariance");
        let gain = &self.cov * h.transpose() * s_inv;
        self.mean += &gain * (y - h * &self.mean);
        let n = self.mean.len();
        let p = (DMatrix::identity(n, n) - &gain * h) * &self.cov;
        self.cov = (&p + p.transpose()) * 0.5;
    }
}

/// Blocks `(f_x, f_xtheta, f_theta, g, h, r)` of a random mixed model.
pub type ModelBlocks = (
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
);

/// Random block matrices for a mixed model, with the joint transition scaled
/// to keep trajectories bounded and `G` square so the noise covariance is
/// positive definite.
pub fn random_model_blocks<R: Rng>(
    rng: &mut R,
    x_dim: usize,
    theta_dim: usize,
    obs_dim: usize,
) -> ModelBlocks {
    let n = x_dim + theta_dim;
    let mut draw = |rows: usize, cols: usize| -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    };
    let mut f_x = draw(x_dim, x_dim);
    let mut f_xtheta = draw(x_dim, theta_dim);
    let mut f_theta = draw(theta_dim, theta_dim);
    // Bound the joint spectral radius by the max row sum of |entries|.
    let row_sum = |m: &DMatrix<f64>| -> f64 {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let bound = (row_sum(&f_x) + row_sum(&f_xtheta))
        .max(row_sum(&f_theta))
        .max(1e-3);
    let scale = 0.95 / bound;
    f_x *= scale;
    f_xtheta *= scale;
    f_theta *= scale;

    let g = draw(n, n) * 0.3 + DMatrix::identity(n, n) * 0.2;
    let h = draw(obs_dim, x_dim);
    let r_half = draw(obs_dim, obs_dim) * 0.3;
    let r = &r_half * r_half.transpose() + DMatrix::identity(obs_dim, obs_dim) * 0.2;
    (f_x, f_xtheta, f_theta, g, h, r)
}

/// Assembles the stacked transition, noise covariance and observation
/// matrices from the same blocks, without going through the library.
pub fn stack_model(
    f_x: &DMatrix<f64>,
    f_xtheta: &DMatrix<f64>,
    f_theta: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let x_dim = f_x.nrows();
    let theta_dim = f_theta.nrows();
    let n = x_dim + theta_dim;
    let mut f = DMatrix::zeros(n, n);
    f.view_mut((0, 0), (x_dim, x_dim)).copy_from(f_x);
    f.view_mut((0, x_dim), (x_dim, theta_dim))
        .copy_from(f_xtheta);
    f.view_mut((x_dim, x_dim), (theta_dim, theta_dim))
        .copy_from(f_theta);
    let q = g * g.transpose();
    let mut h_joint = DMatrix::zeros(h.nrows(), n);
    h_joint.view_mut((0, 0), (h.nrows(), x_dim)).copy_from(h);
    (f, q, h_joint)
}
