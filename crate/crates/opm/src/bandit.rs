//! Multi-armed bandit with possibilistic uncertainty on the outcome
//! probabilities.
//!
//! Outcome probabilities live on the simplex and are described by a
//! possibility function that starts vacuous and concentrates as plays are
//! observed under a categorical likelihood. The posterior has the closed
//! form `prod_i (k theta_i / k_i)^{k_i}` with mode at the outcome
//! proportions. Event credibilities and the maximum credible reward are
//! suprema of the posterior times a linear function of `theta`, computed
//! numerically: multi-start projected gradient ascent plus a simplex-lattice
//! sweep on small outcome sets.

use crate::error::{OpmError, Result};

/// Tolerance for a point to count as lying on the simplex.
const SIMPLEX_TOL: f64 = 1e-12;

/// Resolution of the lattice fallback used by the simplex maximizer.
const LATTICE_RESOLUTION: usize = 200;

/// Largest outcome count for which the lattice fallback is enumerated; the
/// lattice size grows combinatorially with the number of outcomes.
const LATTICE_MAX_ARMS: usize = 4;

/// Possibilistic posterior over the outcome probabilities of one bandit
/// after a sequence of observed plays.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditPosterior {
    /// Number of times each outcome has been observed.
    counts: Vec<u64>,
    /// Reward of each outcome, strictly increasing.
    rewards: Vec<f64>,
}

/// Expected reward under the possibilistic expected value: a point once
/// plays have been observed, the full reward range before.
#[derive(Debug, Clone, PartialEq)]
pub enum ExpectedReward {
    Value(f64),
    Interval { low: f64, high: f64 },
}

/// Mode of the posterior possibility function.
#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorMode {
    /// The outcome proportions, attained for at least one play.
    Point(Vec<f64>),
    /// No plays yet: every simplex point has credibility 1.
    WholeSimplex,
}

/// Which of two bandits to play next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BanditChoice {
    First,
    Second,
}

impl BanditPosterior {
    pub fn new(counts: Vec<u64>, rewards: Vec<f64>) -> Result<Self> {
        if rewards.is_empty() {
            return Err(OpmError::InvalidArgument("no outcomes".into()));
        }
        if counts.len() != rewards.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "{} counts vs {} rewards",
                counts.len(),
                rewards.len()
            )));
        }
        if rewards[0] < 0.0 {
            return Err(OpmError::InvalidArgument(
                "rewards must be nonnegative".into(),
            ));
        }
        if rewards.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OpmError::InvalidArgument(
                "rewards must be strictly increasing".into(),
            ));
        }
        Ok(Self { counts, rewards })
    }

    /// A fresh bandit with no observed plays.
    pub fn unplayed(rewards: Vec<f64>) -> Result<Self> {
        let n = rewards.len();
        Self::new(vec![0; n], rewards)
    }

    /// Records one observed outcome (zero-based index).
    pub fn observe(&mut self, outcome: usize) -> Result<()> {
        if outcome >= self.counts.len() {
            return Err(OpmError::InvalidArgument(format!(
                "outcome {outcome} out of range"
            )));
        }
        self.counts[outcome] += 1;
        Ok(())
    }

    pub fn n_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Total number of observed plays.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Posterior credibility of a simplex point: the product
    /// `prod_i (k theta_i / k_i)^{k_i}` with the convention `0^0 = 1`,
    /// equal to 1 at the outcome proportions.
    pub fn posterior_eval(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.n_arms() {
            return Err(OpmError::DimensionMismatch(format!(
                "point of length {} vs {} outcomes",
                theta.len(),
                self.n_arms()
            )));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL
            || theta
                .iter()
                .any(|&t| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&t))
        {
            return Err(OpmError::OffSimplex(format!("sum = {sum}")));
        }
        Ok(self.log_posterior(theta).exp())
    }

    /// Log of the posterior credibility; `-inf` when a played outcome has
    /// zero probability.
    fn log_posterior(&self, theta: &[f64]) -> f64 {
        let k = self.total() as f64;
        let mut log = 0.0;
        for (&count, &t) in self.counts.iter().zip(theta) {
            if count == 0 {
                continue;
            }
            if t <= 0.0 {
                return f64::NEG_INFINITY;
            }
            log += count as f64 * (t.ln() + k.ln() - (count as f64).ln());
        }
        log
    }

    /// The argmax of the posterior: outcome proportions, or the whole
    /// simplex before any play.
    pub fn posterior_mode(&self) -> PosteriorMode {
        let k = self.total();
        if k == 0 {
            return PosteriorMode::WholeSimplex;
        }
        PosteriorMode::Point(self.counts.iter().map(|&c| c as f64 / k as f64).collect())
    }

    /// Credibility of the next play landing in `event`: the supremum over
    /// the simplex of the posterior times the event probability.
    pub fn event_credibility(&self, event: &[usize]) -> Result<f64> {
        if event.is_empty() {
            return Err(OpmError::InvalidArgument("empty event".into()));
        }
        let mut coeffs = vec![0.0; self.n_arms()];
        for &i in event {
            if i >= self.n_arms() {
                return Err(OpmError::InvalidArgument(format!(
                    "outcome {i} out of range"
                )));
            }
            coeffs[i] = 1.0;
        }
        Ok(self.sup_posterior_times_linear(&coeffs))
    }

    /// Maximum credible reward of the next play: the supremum over the
    /// simplex of the posterior times the mean reward.
    pub fn max_credible_reward(&self) -> f64 {
        self.sup_posterior_times_linear(&self.rewards.clone())
    }

    /// Possibilistic expected reward: the mean reward at the posterior mode,
    /// or the full reward interval before any play.
    pub fn expected_reward_star(&self) -> ExpectedReward {
        match self.posterior_mode() {
            PosteriorMode::WholeSimplex => ExpectedReward::Interval {
                low: self.rewards[0],
                high: self.rewards[self.n_arms() - 1],
            },
            PosteriorMode::Point(mode) => {
                ExpectedReward::Value(mode.iter().zip(&self.rewards).map(|(m, r)| m * r).sum())
            }
        }
    }

    /// Supremum over the simplex of `posterior(theta) * sum_i c_i theta_i`
    /// for nonnegative coefficients.
    fn sup_posterior_times_linear(&self, coeffs: &[f64]) -> f64 {
        let n = self.n_arms();
        // Vacuous posterior: the supremum of a nonnegative linear function
        // on the simplex sits at a vertex.
        if self.total() == 0 {
            return coeffs.iter().cloned().fold(0.0, f64::max);
        }
        // Constant coefficient: the linear factor is flat, the posterior
        // peaks at 1.
        let c0 = coeffs[0];
        if coeffs.iter().all(|&c| c == c0) {
            return c0;
        }

        let objective = |theta: &[f64]| -> f64 {
            let lin: f64 = coeffs.iter().zip(theta).map(|(c, t)| c * t).sum();
            if lin <= 0.0 {
                return 0.0;
            }
            let log = self.log_posterior(theta);
            if log == f64::NEG_INFINITY {
                0.0
            } else {
                (log + lin.ln()).exp()
            }
        };

        let mut best = 0.0_f64;
        for start in self.ascent_starts() {
            best = best.max(self.projected_ascent(&start, coeffs, &objective));
        }
        if n <= LATTICE_MAX_ARMS {
            best = best.max(lattice_max(n, LATTICE_RESOLUTION, &objective));
        }
        best
    }

    /// Deterministic interior starting points for the ascent: the uniform
    /// point, the interior-shifted mode and an interior shift of each
    /// vertex, padded with fixed pseudo-random interior points to at least
    /// ten starts.
    fn ascent_starts(&self) -> Vec<Vec<f64>> {
        let n = self.n_arms();
        let uniform = vec![1.0 / n as f64; n];
        let mut starts = vec![uniform.clone()];
        if let PosteriorMode::Point(mode) = self.posterior_mode() {
            starts.push(blend(&mode, &uniform, 0.9));
        }
        for i in 0..n {
            let mut vertex = vec![0.0; n];
            vertex[i] = 1.0;
            starts.push(blend(&vertex, &uniform, 0.8));
        }
        let mut seed = 0x9e3779b97f4a7c15_u64;
        while starts.len() < 10 {
            let mut point: Vec<f64> = (0..n)
                .map(|_| {
                    seed = seed
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    ((seed >> 11) as f64 / (1u64 << 53) as f64) + 1e-3
                })
                .collect();
            let total: f64 = point.iter().sum();
            point.iter_mut().for_each(|p| *p /= total);
            starts.push(point);
        }
        starts
    }

    /// Projected gradient ascent on the log objective with backtracking.
    fn projected_ascent(
        &self,
        start: &[f64],
        coeffs: &[f64],
        objective: &dyn Fn(&[f64]) -> f64,
    ) -> f64 {
        let n = self.n_arms();
        let mut theta = start.to_vec();
        let mut value = objective(&theta);
        let mut step = 0.5;
        for _ in 0..400 {
            // Gradient of log objective: k_i / theta_i + c_i / (c . theta).
            let lin: f64 = coeffs.iter().zip(&theta).map(|(c, t)| c * t).sum();
            if lin <= 0.0 {
                break;
            }
            let grad: Vec<f64> = (0..n)
                .map(|i| {
                    let from_counts = if self.counts[i] > 0 {
                        self.counts[i] as f64 / theta[i].max(1e-300)
                    } else {
                        0.0
                    };
                    from_counts + coeffs[i] / lin
                })
                .collect();
            let scale = grad.iter().fold(0.0_f64, |a, g| a.max(g.abs())).max(1.0);
            let mut improved = false;
            while step > 1e-12 {
                let candidate: Vec<f64> = theta
                    .iter()
                    .zip(&grad)
                    .map(|(t, g)| t + step * g / scale)
                    .collect();
                let projected = project_to_simplex(&candidate);
                let candidate_value = objective(&projected);
                if candidate_value > value {
                    theta = projected;
                    value = candidate_value;
                    improved = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        value
    }
}

/// Convex blend `w a + (1 - w) b`.
fn blend(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| w * x + (1.0 - w) * y)
        .collect()
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(point: &[f64]) -> Vec<f64> {
    let n = point.len();
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut offset = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if v - candidate > 0.0 {
            offset = candidate;
        }
    }
    let mut projected: Vec<f64> = point.iter().map(|&v| (v - offset).max(0.0)).collect();
    let total: f64 = projected.iter().sum();
    if total > 0.0 {
        projected.iter_mut().for_each(|p| *p /= total);
    } else {
        projected = vec![1.0 / n as f64; n];
    }
    projected
}

/// Exhaustive maximum of the objective over the simplex lattice of the given
/// resolution: all points with coordinates `n_i / resolution`.
fn lattice_max(arms: usize, resolution: usize, objective: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mut composition = vec![0usize; arms];
    let mut best = 0.0_f64;
    fn recurse(
        composition: &mut Vec<usize>,
        arm: usize,
        remaining: usize,
        resolution: usize,
        objective: &dyn Fn(&[f64]) -> f64,
        best: &mut f64,
    ) {
        if arm + 1 == composition.len() {
            composition[arm] = remaining;
            let theta: Vec<f64> = composition
                .iter()
                .map(|&c| c as f64 / resolution as f64)
                .collect();
            *best = best.max(objective(&theta));
            return;
        }
        for take in 0..=remaining {
            composition[arm] = take;
            recurse(
                composition,
                arm + 1,
                remaining - take,
                resolution,
                objective,
                best,
            );
        }
    }
    recurse(
        &mut composition,
        0,
        resolution,
        resolution,
        objective,
        &mut best,
    );
    best
}

/// Plays the bandit with the strictly greater maximum credible reward; the
/// first on ties. Both bandits must share the same reward map.
pub fn select_bandit(first: &BanditPosterior, second: &BanditPosterior) -> Result<BanditChoice> {
    if first.rewards() != second.rewards() {
        return Err(OpmError::InvalidArgument(
            "bandits must share the reward map".into(),
        ));
    }
    if second.max_credible_reward() > first.max_credible_reward() {
        Ok(BanditChoice::Second)
    } else {
        Ok(BanditChoice::First)
    }
}
