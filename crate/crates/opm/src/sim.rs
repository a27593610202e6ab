//! Scenario generation, the two competing filters and the Monte Carlo
//! harness.
//!
//! The scenario is a one-dimensional constant-velocity system whose position
//! is observed through additive noise, except that each step the observation
//! is replaced, with probability `1 - p_d`, by a uniform draw from the
//! observation window. Two filters run on the same data: the max-mixture
//! possibilistic filter, which knows only a credibility bound on clutter,
//! and a fully informed probabilistic Gaussian-sum filter given the true
//! detection probability and clutter density.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OpmError, Result};
use crate::hypothesis::{ClutterModel, MaxMixture, Source};
use crate::linalg::{cholesky_spd, symmetrize};
use crate::mixed::{ConditionalGaussianOpm, ModelMatrices};

/// Parameters of the numerical scenario and of both filter pipelines.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    /// Time step of the constant-velocity model.
    pub delta: f64,
    /// Number of time steps per run.
    pub n_steps: usize,
    /// Probability that an observation originates from the state.
    pub p_d: f64,
    /// Clutter credibility for the possibilistic filter; `None` selects
    /// `1 - p_d`.
    pub alpha: Option<f64>,
    /// Observation noise standard deviation; the model spread is its
    /// square.
    pub obs_noise_std: f64,
    /// Window from which noise-originated observations are drawn.
    pub obs_window: (f64, f64),
    /// Standard deviation of the random initial position and velocity.
    pub init_std: f64,
    /// Master seed for reproducibility.
    pub seed: u64,
    /// Weight threshold below which hypotheses are dropped.
    pub prune_threshold: f64,
    /// Squared-Mahalanobis threshold for merging hypotheses.
    pub merge_sq_threshold: f64,
    /// Hard cap on the number of hypotheses kept per step.
    pub max_hypotheses: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            n_steps: 100,
            p_d: 0.9,
            alpha: None,
            obs_noise_std: 0.5,
            obs_window: (-5.0, 5.0),
            init_std: 0.1,
            seed: 0,
            prune_threshold: 1e-3,
            merge_sq_threshold: 3.22,
            max_hypotheses: 100,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_d > 0.0 && self.p_d <= 1.0) {
            return Err(OpmError::InvalidArgument(format!(
                "detection probability {} outside (0, 1]",
                self.p_d
            )));
        }
        if let Some(alpha) = self.alpha {
            if !(0.0..1.0).contains(&alpha) {
                return Err(OpmError::InvalidArgument(format!(
                    "clutter credibility {alpha} outside [0, 1)"
                )));
            }
        }
        if self.delta <= 0.0 {
            return Err(OpmError::InvalidArgument(
                "time step must be positive".into(),
            ));
        }
        if self.obs_window.1 <= self.obs_window.0 {
            return Err(OpmError::InvalidArgument(
                "observation window is degenerate".into(),
            ));
        }
        if self.n_steps == 0 {
            return Err(OpmError::InvalidArgument("need at least one step".into()));
        }
        if self.obs_noise_std <= 0.0 || self.init_std <= 0.0 {
            return Err(OpmError::InvalidArgument(
                "noise scales must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.prune_threshold) {
            return Err(OpmError::InvalidArgument(
                "prune threshold outside [0, 1)".into(),
            ));
        }
        if self.merge_sq_threshold <= 0.0 || self.max_hypotheses == 0 {
            return Err(OpmError::InvalidArgument(
                "merge threshold and hypothesis cap must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Effective clutter credibility.
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0 - self.p_d)
    }

    /// Width of the observation window.
    pub fn window_width(&self) -> f64 {
        self.obs_window.1 - self.obs_window.0
    }

    /// The constant-velocity model: position is the random block, velocity
    /// the deterministic block, and only the position is observed.
    pub fn model(&self) -> ModelMatrices {
        let d = self.delta;
        let g = DMatrix::from_column_slice(2, 1, &[d * d / 2.0, d]);
        ModelMatrices::from_noise_shaping(
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, d),
            DMatrix::identity(1, 1),
            &g,
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, self.obs_noise_std * self.obs_noise_std),
        )
        .expect("constant-velocity model blocks are well formed")
    }
}

/// One simulated run: true states, true observation sources and the
/// observation sequence, all of length `n_steps`.
#[derive(Debug, Clone)]
pub struct ScenarioTrace {
    /// True (position, velocity) after each step.
    pub truth: Vec<(f64, f64)>,
    /// True origin of each observation.
    pub sources: Vec<Source>,
    /// Scalar observations.
    pub observations: Vec<f64>,
}

/// Simulates one trace of the scenario.
///
/// The state starts from independent normal draws with deviation
/// `init_std`, evolves through the constant-velocity model with standard
/// normal driving noise, and each step emits either a noisy position
/// observation (probability `p_d`) or a uniform draw from the window.
pub fn generate_scenario<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> ScenarioTrace {
    let d = cfg.delta;
    let normal = StandardNormal;
    let draw_normal = |rng: &mut R| -> f64 { normal.sample(rng) };
    let window = Uniform::new_inclusive(cfg.obs_window.0, cfg.obs_window.1);

    let mut position = cfg.init_std * draw_normal(rng);
    let mut velocity = cfg.init_std * draw_normal(rng);

    let mut truth = Vec::with_capacity(cfg.n_steps);
    let mut sources = Vec::with_capacity(cfg.n_steps);
    let mut observations = Vec::with_capacity(cfg.n_steps);
    for _ in 0..cfg.n_steps {
        let shock = draw_normal(rng);
        position += d * velocity + d * d / 2.0 * shock;
        velocity += d * shock;
        truth.push((position, velocity));

        let detected = rng.gen_bool(cfg.p_d);
        if detected {
            sources.push(Source::State);
            observations.push(position + cfg.obs_noise_std * draw_normal(rng));
        } else {
            sources.push(Source::Noise);
            observations.push(window.sample(rng));
        }
    }
    ScenarioTrace {
        truth,
        sources,
        observations,
    }
}

/// Per-step output of one filter on one trace.
#[derive(Debug, Clone)]
pub struct FilterRun {
    /// Estimated position after each step.
    pub positions: Vec<f64>,
    /// Estimated observation source at each step.
    pub sources: Vec<Source>,
}

/// Runs the possibilistic max-mixture filter over a trace: predict, branch
/// on the observation source, prune, merge and cap each step, reading the
/// estimate off the maximum-weight hypothesis.
pub fn run_opm_filter(trace: &ScenarioTrace, cfg: &ScenarioConfig) -> Result<FilterRun> {
    cfg.validate()?;
    let model = cfg.model();
    let clutter = ClutterModel::new(cfg.alpha())?;
    let mut mixture: MaxMixture<Source> =
        MaxMixture::single(ConditionalGaussianOpm::standard_prior(1, 1));

    let mut positions = Vec::with_capacity(trace.observations.len());
    let mut sources = Vec::with_capacity(trace.observations.len());
    for &y in &trace.observations {
        let y = DVector::from_element(1, y);
        mixture = mixture.predict(&model)?;
        mixture = mixture.outlier_update(&y, &clutter, &model)?;
        mixture = mixture.prune(cfg.prune_threshold)?;
        mixture = mixture.merge(cfg.merge_sq_threshold)?;
        mixture = mixture.truncate(cfg.max_hypotheses)?;

        let best = mixture.map_hypothesis();
        positions.push(best.state.m_x()[0]);
        sources.push(*best.labels.last().expect("one label per assimilated step"));
    }
    Ok(FilterRun { positions, sources })
}

/// One branch of the fully informed probabilistic Gaussian-sum filter.
#[derive(Debug, Clone)]
struct ProbBranch {
    weight: f64,
    labels: Vec<Source>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Runs the probabilistic baseline: a Gaussian-sum Bayes filter over the
/// joint (position, velocity) state given the true detection probability and
/// the true uniform clutter density, with the same pruning and merging
/// thresholds as the possibilistic filter but probability-normalized
/// weights.
pub fn run_probabilistic_baseline(
    trace: &ScenarioTrace,
    cfg: &ScenarioConfig,
) -> Result<FilterRun> {
    cfg.validate()?;
    let model = cfg.model();
    let f = model.joint_transition();
    let q = model.joint_noise_cov();
    let h = model.joint_observation();
    let r = model.r()[(0, 0)];
    let clutter_density = (1.0 - cfg.p_d) / cfg.window_width();

    let mut branches = vec![ProbBranch {
        weight: 1.0,
        labels: Vec::new(),
        mean: DVector::zeros(2),
        cov: DMatrix::identity(2, 2) * cfg.init_std * cfg.init_std,
    }];

    let mut positions = Vec::with_capacity(trace.observations.len());
    let mut sources = Vec::with_capacity(trace.observations.len());
    for &y in &trace.observations {
        // Predict every branch.
        for b in &mut branches {
            b.mean = &f * &b.mean;
            b.cov = symmetrize(&(&f * &b.cov * f.transpose() + &q));
        }

        // Branch on the observation source.
        let mut children = Vec::with_capacity(branches.len() * 2);
        for b in &branches {
            let s = (&h * &b.cov * h.transpose())[(0, 0)] + r;
            let innovation = y - (&h * &b.mean)[0];
            let density = (-0.5 * innovation * innovation / s).exp()
                / (2.0 * std::f64::consts::PI * s).sqrt();
            let gain = &b.cov * h.transpose() / s;
            let mean = &b.mean + &gain * innovation;
            let cov = symmetrize(&(&b.cov - &gain * (&h * &b.cov)));
            let mut state_labels = b.labels.clone();
            state_labels.push(Source::State);
            children.push(ProbBranch {
                weight: b.weight * cfg.p_d * density,
                labels: state_labels,
                mean,
                cov,
            });
            let mut noise_labels = b.labels.clone();
            noise_labels.push(Source::Noise);
            children.push(ProbBranch {
                weight: b.weight * clutter_density,
                labels: noise_labels,
                mean: b.mean.clone(),
                cov: b.cov.clone(),
            });
        }

        normalize_prob(&mut children)?;

        // Prune strictly-below-threshold branches, always keeping the best.
        let best_weight = children.iter().map(|b| b.weight).fold(0.0, f64::max);
        children.retain(|b| b.weight >= cfg.prune_threshold || b.weight == best_weight);
        normalize_prob(&mut children)?;

        // Highest-weight-first merging with summed weights.
        children = merge_prob(children, cfg.merge_sq_threshold)?;

        // Cap and renormalize.
        if children.len() > cfg.max_hypotheses {
            let mut order: Vec<usize> = (0..children.len()).collect();
            order.sort_by(|&a, &b| {
                children[b]
                    .weight
                    .partial_cmp(&children[a].weight)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            order.truncate(cfg.max_hypotheses);
            order.sort_unstable();
            children = order.into_iter().map(|i| children[i].clone()).collect();
            normalize_prob(&mut children)?;
        }

        branches = children;
        let best = best_prob_branch(&branches);
        positions.push(best.mean[0]);
        sources.push(*best.labels.last().expect("one label per step"));
    }
    Ok(FilterRun { positions, sources })
}

fn best_prob_branch(branches: &[ProbBranch]) -> &ProbBranch {
    let mut best = 0;
    for i in 1..branches.len() {
        if branches[i].weight > branches[best].weight {
            best = i;
        }
    }
    &branches[best]
}

fn normalize_prob(branches: &mut [ProbBranch]) -> Result<()> {
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(OpmError::IncompatibleEvidence);
    }
    for b in branches {
        b.weight /= total;
    }
    Ok(())
}

fn merge_prob(branches: Vec<ProbBranch>, threshold: f64) -> Result<Vec<ProbBranch>> {
    let mut order: Vec<usize> = (0..branches.len()).collect();
    order.sort_by(|&a, &b| {
        branches[b]
            .weight
            .partial_cmp(&branches[a].weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut absorbed = vec![false; branches.len()];
    let mut merged = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if absorbed[i] {
            continue;
        }
        let absorber = &branches[i];
        let chol = cholesky_spd(&absorber.cov, "branch covariance")?;
        let mut group = vec![i];
        for &j in &order[rank + 1..] {
            if absorbed[j] {
                continue;
            }
            let d = &branches[j].mean - &absorber.mean;
            if d.dot(&chol.solve(&d)) <= threshold {
                absorbed[j] = true;
                group.push(j);
            }
        }
        if group.len() == 1 {
            merged.push(absorber.clone());
            continue;
        }
        let total: f64 = group.iter().map(|&g| branches[g].weight).sum();
        let mut mean = DVector::zeros(absorber.mean.len());
        for &g in &group {
            mean += &branches[g].mean * (branches[g].weight / total);
        }
        let mut cov = DMatrix::zeros(mean.len(), mean.len());
        for &g in &group {
            let d = &branches[g].mean - &mean;
            cov += (&branches[g].cov + &d * d.transpose()) * (branches[g].weight / total);
        }
        merged.push(ProbBranch {
            weight: total,
            labels: absorber.labels.clone(),
            mean,
            cov: symmetrize(&cov),
        });
    }
    Ok(merged)
}

/// Root mean squared error over runs, summed over time inside each run:
/// `sqrt(1/M sum_i sum_k |est - truth|^2)`.
pub fn rmse(estimates: &[Vec<f64>], truths: &[Vec<f64>]) -> Result<f64> {
    if estimates.len() != truths.len() || estimates.is_empty() {
        return Err(OpmError::DimensionMismatch(format!(
            "{} estimate runs vs {} truth runs",
            estimates.len(),
            truths.len()
        )));
    }
    let mut total = 0.0;
    for (est, truth) in estimates.iter().zip(truths) {
        if est.len() != truth.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "run of length {} vs truth of length {}",
                est.len(),
                truth.len()
            )));
        }
        total += est
            .iter()
            .zip(truth)
            .map(|(e, t)| (e - t) * (e - t))
            .sum::<f64>();
    }
    Ok((total / estimates.len() as f64).sqrt())
}

/// Fraction of steps whose estimated observation source disagrees with the
/// truth, pooled over runs.
pub fn association_error(estimates: &[Vec<Source>], truths: &[Vec<Source>]) -> Result<f64> {
    if estimates.len() != truths.len() || estimates.is_empty() {
        return Err(OpmError::DimensionMismatch(format!(
            "{} estimate runs vs {} truth runs",
            estimates.len(),
            truths.len()
        )));
    }
    let mut mismatches = 0usize;
    let mut steps = 0usize;
    for (est, truth) in estimates.iter().zip(truths) {
        if est.len() != truth.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "run of length {} vs truth of length {}",
                est.len(),
                truth.len()
            )));
        }
        steps += est.len();
        mismatches += est.iter().zip(truth).filter(|(e, t)| e != t).count();
    }
    Ok(mismatches as f64 / steps as f64)
}

/// Which filter produced a metrics row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Opm,
    Probabilistic,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Opm => write!(f, "opm"),
            Method::Probabilistic => write!(f, "probabilistic"),
        }
    }
}

/// Aggregated metrics of one method at one detection probability.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRow {
    pub method: Method,
    pub p_d: f64,
    pub rmse: f64,
    pub assoc_error: f64,
    pub runs: usize,
    pub seed: u64,
}

/// Runs both filters over `runs` independently seeded scenarios for every
/// detection probability in `pd_list` and aggregates the metrics.
///
/// Each run draws its own deterministic random stream from the master seed,
/// the detection-probability index and the run index, and runs execute in
/// parallel with the aggregation ordered by run index.
pub fn monte_carlo(cfg: &ScenarioConfig, pd_list: &[f64], runs: usize) -> Result<Vec<MetricsRow>> {
    if pd_list.is_empty() || runs == 0 {
        return Err(OpmError::InvalidArgument(
            "need at least one detection probability and one run".into(),
        ));
    }
    let mut rows = Vec::with_capacity(pd_list.len() * 2);
    for (pd_index, &p_d) in pd_list.iter().enumerate() {
        let mut run_cfg = cfg.clone();
        run_cfg.p_d = p_d;
        run_cfg.validate()?;

        let outcomes: Vec<(FilterRun, FilterRun, ScenarioTrace)> = (0..runs)
            .into_par_iter()
            .map(|run_index| {
                let mut rng = run_rng(cfg.seed, pd_index, run_index);
                let trace = generate_scenario(&run_cfg, &mut rng);
                let opm = run_opm_filter(&trace, &run_cfg)?;
                let prob = run_probabilistic_baseline(&trace, &run_cfg)?;
                Ok((opm, prob, trace))
            })
            .collect::<Result<Vec<_>>>()?;

        let truth_positions: Vec<Vec<f64>> = outcomes
            .iter()
            .map(|(_, _, t)| t.truth.iter().map(|&(p, _)| p).collect())
            .collect();
        let truth_sources: Vec<Vec<Source>> =
            outcomes.iter().map(|(_, _, t)| t.sources.clone()).collect();

        for method in [Method::Opm, Method::Probabilistic] {
            fn pick(outcome: &(FilterRun, FilterRun, ScenarioTrace), method: Method) -> &FilterRun {
                match method {
                    Method::Opm => &outcome.0,
                    Method::Probabilistic => &outcome.1,
                }
            }
            let positions: Vec<Vec<f64>> = outcomes
                .iter()
                .map(|o| pick(o, method).positions.clone())
                .collect();
            let sources: Vec<Vec<Source>> = outcomes
                .iter()
                .map(|o| pick(o, method).sources.clone())
                .collect();
            rows.push(MetricsRow {
                method,
                p_d,
                rmse: rmse(&positions, &truth_positions)?,
                assoc_error: association_error(&sources, &truth_sources)?,
                runs,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

/// Deterministic per-run random stream.
fn run_rng(master_seed: u64, pd_index: usize, run_index: usize) -> ChaCha12Rng {
    let mut state = master_seed
        ^ (pd_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (run_index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    // One splitmix64 round to decorrelate nearby indices.
    state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha12Rng::seed_from_u64(z ^ (z >> 31))
}
