//! Runtime validation: checks the conditional-form filter against an
//! independent joint Kalman implementation and spot-checks the closed-form
//! Gaussian algebra, printing one line per check.

use anyhow::{bail, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use opm::gaussian::GaussianPossibility;
use opm::mixed::{self, ConditionalGaussianOpm, ModelMatrices};

/// Plain joint Kalman recursion over the stacked state, written against
/// nalgebra only so it cannot share a code path with the filter under test.
struct JointKalman {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl JointKalman {
    fn predict(&mut self, f: &DMatrix<f64>, q: &DMatrix<f64>) {
        self.mean = f * &self.mean;
        let p = f * &self.cov * f.transpose() + q;
        self.cov = (&p + p.transpose()) * 0.5;
    }

    fn update(&mut self, y: &DVector<f64>, h: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<()> {
        let s = h * &self.cov * h.transpose() + r;
        let Some(s_inv) = s.try_inverse() else {
            bail!("singular innovation covariance in the reference filter");
        };
        let gain = &self.cov * h.transpose() * s_inv;
        self.mean += &gain * (y - h * &self.mean);
        let n = self.mean.len();
        let p = (DMatrix::identity(n, n) - &gain * h) * &self.cov;
        self.cov = (&p + p.transpose()) * 0.5;
        Ok(())
    }
}

fn random_blocks(
    rng: &mut ChaCha12Rng,
    x_dim: usize,
    theta_dim: usize,
    obs_dim: usize,
) -> (
    ModelMatrices,
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
    DMatrix<f64>,
) {
    let n = x_dim + theta_dim;
    let mut draw = |rows: usize, cols: usize| -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    };
    let row_sum = |m: &DMatrix<f64>| -> f64 {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut f_x = draw(x_dim, x_dim);
    let mut f_xtheta = draw(x_dim, theta_dim);
    let mut f_theta = draw(theta_dim, theta_dim);
    let scale = 0.95
        / (row_sum(&f_x) + row_sum(&f_xtheta))
            .max(row_sum(&f_theta))
            .max(1e-3);
    f_x *= scale;
    f_xtheta *= scale;
    f_theta *= scale;
    let g = draw(n, n) * 0.3 + DMatrix::identity(n, n) * 0.2;
    let h = draw(obs_dim, x_dim);
    let r_half = draw(obs_dim, obs_dim) * 0.3;
    let r = &r_half * r_half.transpose() + DMatrix::identity(obs_dim, obs_dim) * 0.2;

    let mut f_joint = DMatrix::zeros(n, n);
    f_joint.view_mut((0, 0), (x_dim, x_dim)).copy_from(&f_x);
    f_joint
        .view_mut((0, x_dim), (x_dim, theta_dim))
        .copy_from(&f_xtheta);
    f_joint
        .view_mut((x_dim, x_dim), (theta_dim, theta_dim))
        .copy_from(&f_theta);
    let q_joint = &g * g.transpose();
    let mut h_joint = DMatrix::zeros(obs_dim, n);
    h_joint.view_mut((0, 0), (obs_dim, x_dim)).copy_from(&h);

    let model = ModelMatrices::from_noise_shaping(f_x, f_xtheta, f_theta, &g, h, r.clone())
        .expect("random blocks are well formed");
    (model, f_joint, q_joint, h_joint, r)
}

/// Runs every check; returns an error (nonzero exit) on the first failure.
pub fn run(models: usize, steps: usize) -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(0x0b5e55ed);

    // Filter equivalence against the reference joint Kalman filter.
    let mut worst = 0.0_f64;
    for trial in 0..models {
        let x_dim = rng.gen_range(1..=3);
        let theta_dim = rng.gen_range(1..=3);
        let obs_dim = rng.gen_range(1..=x_dim);
        let (model, f_joint, q_joint, h_joint, r) =
            random_blocks(&mut rng, x_dim, theta_dim, obs_dim);

        let mut state = ConditionalGaussianOpm::standard_prior(x_dim, theta_dim);
        let (mean0, cov0) = state.recover_joint();
        let mut reference = JointKalman {
            mean: mean0,
            cov: cov0,
        };
        for _ in 0..steps {
            let y = DVector::from_fn(obs_dim, |_, _| rng.gen_range(-2.0..2.0));
            let (pred, _) = mixed::predict(&state, &model)?;
            let (upd, gains) = mixed::update(&pred, &y, &model)?;
            state = upd;
            if !(0.0..=1.0).contains(&gains.likelihood) {
                bail!(
                    "marginal likelihood {} outside [0, 1] in trial {trial}",
                    gains.likelihood
                );
            }
            reference.predict(&f_joint, &q_joint);
            reference.update(&y, &h_joint, &r)?;

            let (mean, cov) = state.recover_joint();
            let err = (&mean - &reference.mean)
                .abs()
                .max()
                .max((&cov - &reference.cov).abs().max());
            worst = worst.max(err);
            if err >= 1e-9 {
                bail!("filter diverged from the joint reference: error {err:.3e} in trial {trial}");
            }
        }
    }
    println!(
        "ok filter-equivalence: {models} random models x {steps} steps, max |error| {worst:.3e} < 1e-9"
    );

    // Closed-form Gaussian algebra spot checks.
    let g1 = GaussianPossibility::scalar(1.0, 4.0)?;
    let g2 = GaussianPossibility::scalar(2.0, 9.0)?;
    let sum = g1.sum_independent(&g2)?;
    if sum.mean()[0] != 3.0 || sum.spread()[(0, 0)] != 13.0 {
        bail!("sum rule produced unexpected parameters");
    }
    let mut sup_err = 0.0_f64;
    for &x in &[-2.0, 1.0, 4.0] {
        let mut sup = 0.0_f64;
        let mut u = -25.0;
        while u <= 25.0 {
            let v = g1.eval(&DVector::from_element(1, u))?
                * g2.eval(&DVector::from_element(1, x - u))?;
            sup = sup.max(v);
            u += 1e-3;
        }
        sup_err = sup_err.max((sup - sum.eval(&DVector::from_element(1, x))?).abs());
    }
    if sup_err >= 1e-5 {
        bail!("sup-convolution check failed: error {sup_err:.3e}");
    }
    println!("ok gaussian-sum: parameters exact, sup-convolution error {sup_err:.3e} < 1e-5");

    let scaled = g1.linear_transform(&DMatrix::from_element(1, 1, 2.0), &DVector::zeros(1))?;
    if scaled.mean()[0] != 2.0 || scaled.spread()[(0, 0)] != 16.0 {
        bail!("linear transform produced unexpected parameters");
    }
    println!("ok gaussian-transform: scaling doubles the mean and quadruples the spread");

    println!("validation passed");
    Ok(())
}
