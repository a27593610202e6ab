//! Oracle checks for the hypothesis-indexed filters: each branch must agree
//! with a standalone filter fed exactly that branch's selected observations.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use common::{random_model_blocks, stack_model, JointKalman};
use opm::hypothesis::{ClutterModel, MaxMixture, Source};
use opm::mixed::{ConditionalGaussianOpm, ModelMatrices};

fn scenario_model() -> ModelMatrices {
    let delta = 0.1;
    let g = DMatrix::from_column_slice(2, 1, &[delta * delta / 2.0, delta]);
    ModelMatrices::from_noise_shaping(
        DMatrix::identity(1, 1),
        DMatrix::from_element(1, 1, delta),
        DMatrix::identity(1, 1),
        &g,
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 0.25),
    )
    .unwrap()
}

#[test]
fn per_branch_state_equals_standalone_filter_on_selected_observations() {
    // Five scans of two observations each, no pruning or merging: 32
    // branches, each of which must match a standalone joint Kalman filter
    // fed only the observations its label sequence selected.
    let model = scenario_model();
    let scans: Vec<Vec<DVector<f64>>> = (0..5)
        .map(|k| {
            vec![
                DVector::from_element(1, 0.1 * k as f64),
                DVector::from_element(1, 0.1 * k as f64 + 1.5),
            ]
        })
        .collect();

    let mut mixture: MaxMixture<usize> =
        MaxMixture::single(ConditionalGaussianOpm::standard_prior(1, 1));
    for scan in &scans {
        mixture = mixture.predict(&model).unwrap();
        mixture = mixture.da_update(scan, &model).unwrap();
    }
    assert_eq!(mixture.len(), 32);

    let f_x = DMatrix::identity(1, 1);
    let f_xtheta = DMatrix::from_element(1, 1, 0.1);
    let f_theta = DMatrix::identity(1, 1);
    let g = DMatrix::from_column_slice(2, 1, &[0.005, 0.1]);
    let h = DMatrix::from_element(1, 1, 1.0);
    let r = DMatrix::from_element(1, 1, 0.25);
    let (f_joint, q_joint, h_joint) = stack_model(&f_x, &f_xtheta, &f_theta, &g, &h);

    for hypothesis in mixture.hypotheses() {
        let prior = ConditionalGaussianOpm::standard_prior(1, 1);
        let (m0, p0) = prior.recover_joint();
        let mut oracle = JointKalman::new(m0, p0);
        for (scan, &choice) in scans.iter().zip(&hypothesis.labels) {
            oracle.predict(&f_joint, &q_joint);
            oracle.update(&scan[choice], &h_joint, &r);
        }
        let (mean, cov) = hypothesis.state.recover_joint();
        assert!(
            (&mean - &oracle.mean).abs().max() < 1e-9,
            "labels {:?}",
            hypothesis.labels
        );
        assert!((&cov - &oracle.cov).abs().max() < 1e-9);
    }
}

#[test]
fn branch_state_depends_only_on_selected_observations() {
    // Two pipelines whose scans differ only in the observations a branch
    // did NOT select must produce identical states for that branch.
    let model = scenario_model();
    let scans_a: Vec<Vec<DVector<f64>>> = (0..4)
        .map(|k| {
            vec![
                DVector::from_element(1, 0.05 * k as f64),
                DVector::from_element(1, 2.0 + 0.3 * k as f64),
            ]
        })
        .collect();
    // Same selected (index 0) observations, different rejected ones.
    let scans_b: Vec<Vec<DVector<f64>>> = (0..4)
        .map(|k| {
            vec![
                DVector::from_element(1, 0.05 * k as f64),
                DVector::from_element(1, -3.0 - 0.7 * k as f64),
            ]
        })
        .collect();

    let run = |scans: &[Vec<DVector<f64>>]| {
        let mut mixture: MaxMixture<usize> =
            MaxMixture::single(ConditionalGaussianOpm::standard_prior(1, 1));
        for scan in scans {
            mixture = mixture.predict(&model).unwrap();
            mixture = mixture.da_update(scan, &model).unwrap();
        }
        mixture
    };
    let mixture_a = run(&scans_a);
    let mixture_b = run(&scans_b);

    let all_zero = vec![0usize; 4];
    let branch_a = mixture_a
        .hypotheses()
        .iter()
        .find(|h| h.labels == all_zero)
        .unwrap();
    let branch_b = mixture_b
        .hypotheses()
        .iter()
        .find(|h| h.labels == all_zero)
        .unwrap();
    let (mean_a, cov_a) = branch_a.state.recover_joint();
    let (mean_b, cov_b) = branch_b.state.recover_joint();
    assert_eq!(mean_a, mean_b);
    assert_eq!(cov_a, cov_b);
}

#[test]
fn outlier_filter_state_branch_matches_mixed_filter() {
    // With pruning and merging disabled, the all-state branch of the
    // outlier filter equals a plain mixed filter fed every observation.
    let model = scenario_model();
    let clutter = ClutterModel::new(0.2).unwrap();
    let observations: Vec<f64> = (0..6).map(|k| 0.3 * (k as f64).cos()).collect();

    let mut mixture: MaxMixture<Source> =
        MaxMixture::single(ConditionalGaussianOpm::standard_prior(1, 1));
    let mut reference = ConditionalGaussianOpm::standard_prior(1, 1);
    for &y in &observations {
        let y = DVector::from_element(1, y);
        mixture = mixture.predict(&model).unwrap();
        mixture = mixture.outlier_update(&y, &clutter, &model).unwrap();

        let (pred, _) = opm::mixed::predict(&reference, &model).unwrap();
        let (upd, _) = opm::mixed::update(&pred, &y, &model).unwrap();
        reference = upd;
    }
    let all_state = vec![Source::State; observations.len()];
    let branch = mixture
        .hypotheses()
        .iter()
        .find(|h| h.labels == all_state)
        .unwrap();
    assert!((branch.state.m_x() - reference.m_x()).abs().max() < 1e-9);
    assert!((branch.state.p_x() - reference.p_x()).abs().max() < 1e-9);
    assert!((branch.state.m_theta() - reference.m_theta()).abs().max() < 1e-9);
}

#[test]
fn random_model_branches_match_oracle_with_reduction_disabled() {
    let mut rng = ChaCha12Rng::seed_from_u64(88);
    for _ in 0..5 {
        let (f_x, f_xtheta, f_theta, g, h, r) = random_model_blocks(&mut rng, 1, 1, 1);
        let model = ModelMatrices::from_noise_shaping(
            f_x.clone(),
            f_xtheta.clone(),
            f_theta.clone(),
            &g,
            h.clone(),
            r.clone(),
        )
        .unwrap();
        let (f_joint, q_joint, h_joint) = stack_model(&f_x, &f_xtheta, &f_theta, &g, &h);

        let scans: Vec<Vec<DVector<f64>>> = (0..4)
            .map(|_| {
                vec![
                    DVector::from_element(1, rng.gen_range(-1.0..1.0)),
                    DVector::from_element(1, rng.gen_range(-1.0..1.0)),
                    DVector::from_element(1, rng.gen_range(-1.0..1.0)),
                ]
            })
            .collect();
        let mut mixture: MaxMixture<usize> =
            MaxMixture::single(ConditionalGaussianOpm::standard_prior(1, 1));
        for scan in &scans {
            mixture = mixture.predict(&model).unwrap();
            mixture = mixture.da_update(scan, &model).unwrap();
        }
        assert_eq!(mixture.len(), 81);

        for hypothesis in mixture.hypotheses().iter().step_by(7) {
            let (m0, p0) = ConditionalGaussianOpm::standard_prior(1, 1).recover_joint();
            let mut oracle = JointKalman::new(m0, p0);
            for (scan, &choice) in scans.iter().zip(&hypothesis.labels) {
                oracle.predict(&f_joint, &q_joint);
                oracle.update(&scan[choice], &h_joint, &r);
            }
            let (mean, cov) = hypothesis.state.recover_joint();
            assert!((&mean - &oracle.mean).abs().max() < 1e-9);
            assert!((&cov - &oracle.cov).abs().max() < 1e-9);
        }
    }
}
