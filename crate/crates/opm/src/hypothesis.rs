//! Hypothesis-indexed max-mixture filters.
//!
//! A mixture holds one hypothesis per considered label sequence: an
//! observation index per scan for data association, or a state/noise source
//! label per step for the outlier-robust filter. Weights are possibility
//! values combined by maximum: after every operation they are divided by
//! their maximum so the best hypothesis carries weight exactly 1. Hypothesis
//! growth is contained by weight pruning, Mahalanobis merging and a hard cap.

use nalgebra::{DMatrix, DVector};

use crate::error::{OpmError, Result};
use crate::linalg::{mahalanobis_sq, symmetrize};
use crate::mixed::{self, ConditionalGaussianOpm, ModelMatrices};

/// Origin of a single observation in the outlier model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// The observation comes from the tracked state.
    State,
    /// The observation is background noise.
    Noise,
}

/// Clutter description of the outlier model: the credibility for an
/// observation to originate from the background noise.
#[derive(Debug, Clone, Copy)]
pub struct ClutterModel {
    alpha: f64,
}

impl ClutterModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(OpmError::InvalidArgument(format!(
                "clutter credibility {alpha} outside [0, 1]"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// One label sequence with its possibility weight and conditional state.
#[derive(Debug, Clone)]
pub struct Hypothesis<L> {
    pub labels: Vec<L>,
    pub weight: f64,
    pub state: ConditionalGaussianOpm,
}

/// A finite set of hypotheses combined by maximum, with the largest weight
/// sup-normalized to exactly 1.
#[derive(Debug, Clone)]
pub struct MaxMixture<L> {
    hypotheses: Vec<Hypothesis<L>>,
}

impl<L: Clone> MaxMixture<L> {
    /// Builds a mixture and sup-normalizes its weights.
    pub fn new(hypotheses: Vec<Hypothesis<L>>) -> Result<Self> {
        let mut mixture = Self { hypotheses };
        mixture.sup_normalize()?;
        Ok(mixture)
    }

    /// A single empty-history hypothesis with weight 1.
    pub fn single(state: ConditionalGaussianOpm) -> Self {
        Self {
            hypotheses: vec![Hypothesis {
                labels: Vec::new(),
                weight: 1.0,
                state,
            }],
        }
    }

    pub fn hypotheses(&self) -> &[Hypothesis<L>] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    fn sup_normalize(&mut self) -> Result<()> {
        if self.hypotheses.is_empty() {
            return Err(OpmError::InvalidArgument("empty mixture".into()));
        }
        let max = self
            .hypotheses
            .iter()
            .map(|h| h.weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || max <= 0.0 {
            return Err(OpmError::IncompatibleEvidence);
        }
        for h in &mut self.hypotheses {
            h.weight /= max;
        }
        Ok(())
    }

    /// Advances every hypothesis state through the transition model; weights
    /// are untouched because the prior on the next label is vacuous, so the
    /// hypothesis count never changes here.
    pub fn predict(&self, model: &ModelMatrices) -> Result<Self> {
        let mut hypotheses = Vec::with_capacity(self.len());
        for h in &self.hypotheses {
            let (state, _) = mixed::predict(&h.state, model)?;
            hypotheses.push(Hypothesis {
                labels: h.labels.clone(),
                weight: h.weight,
                state,
            });
        }
        Ok(Self { hypotheses })
    }

    /// Drops hypotheses with weight strictly below `threshold`. The
    /// max-weight hypothesis always survives (its normalized weight is 1),
    /// and weights are renormalized afterwards.
    pub fn prune(&self, threshold: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&threshold) {
            return Err(OpmError::InvalidArgument(format!(
                "prune threshold {threshold} outside [0, 1)"
            )));
        }
        let hypotheses: Vec<Hypothesis<L>> = self
            .hypotheses
            .iter()
            .filter(|h| h.weight >= threshold)
            .cloned()
            .collect();
        Self::new(hypotheses)
    }

    /// Greedy highest-weight-first merging of hypotheses whose joint means
    /// fall within `mahalanobis_sq_threshold` of an absorber, measured with
    /// the absorber's joint covariance.
    ///
    /// An absorbed group keeps the absorber's label sequence and the maximum
    /// weight; its joint moments are matched with relative weights,
    /// including the spread-of-means term.
    pub fn merge(&self, mahalanobis_sq_threshold: f64) -> Result<Self> {
        if mahalanobis_sq_threshold <= 0.0 {
            return Err(OpmError::InvalidArgument(format!(
                "merge threshold {mahalanobis_sq_threshold} must be positive"
            )));
        }
        if self.len() <= 1 {
            return Self::new(self.hypotheses.clone());
        }

        // Stable order by descending weight, insertion order breaking ties.
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.hypotheses[b]
                .weight
                .partial_cmp(&self.hypotheses[a].weight)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let joints: Vec<(DVector<f64>, DMatrix<f64>)> = self
            .hypotheses
            .iter()
            .map(|h| h.state.recover_joint())
            .collect();
        let x_dim = self.hypotheses[0].state.x_dim();

        let mut absorbed = vec![false; self.len()];
        let mut merged = Vec::new();
        for (rank, &i) in order.iter().enumerate() {
            if absorbed[i] {
                continue;
            }
            let (mean_a, cov_a) = &joints[i];
            let mut group = vec![i];
            for &j in &order[rank + 1..] {
                if absorbed[j] {
                    continue;
                }
                let d = &joints[j].0 - mean_a;
                let dist = mahalanobis_sq(&d, cov_a, "absorber joint covariance")?;
                if dist <= mahalanobis_sq_threshold {
                    absorbed[j] = true;
                    group.push(j);
                }
            }
            if group.len() == 1 {
                merged.push(self.hypotheses[i].clone());
                continue;
            }
            let total: f64 = group.iter().map(|&g| self.hypotheses[g].weight).sum();
            let mut mean = DVector::zeros(mean_a.len());
            for &g in &group {
                mean += &joints[g].0 * (self.hypotheses[g].weight / total);
            }
            let mut cov = DMatrix::zeros(mean_a.len(), mean_a.len());
            for &g in &group {
                let d = &joints[g].0 - &mean;
                cov += (&joints[g].1 + &d * d.transpose()) * (self.hypotheses[g].weight / total);
            }
            let state = ConditionalGaussianOpm::from_joint(&mean, &symmetrize(&cov), x_dim)?;
            merged.push(Hypothesis {
                labels: self.hypotheses[i].labels.clone(),
                weight: self.hypotheses[i].weight,
                state,
            });
        }
        Self::new(merged)
    }

    /// Keeps at most `max_hypotheses` hypotheses by weight (stable on ties)
    /// and renormalizes.
    pub fn truncate(&self, max_hypotheses: usize) -> Result<Self> {
        if max_hypotheses == 0 {
            return Err(OpmError::InvalidArgument(
                "hypothesis cap must be positive".into(),
            ));
        }
        if self.len() <= max_hypotheses {
            return Self::new(self.hypotheses.clone());
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.hypotheses[b]
                .weight
                .partial_cmp(&self.hypotheses[a].weight)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order.truncate(max_hypotheses);
        order.sort_unstable();
        let kept = order.iter().map(|&i| self.hypotheses[i].clone()).collect();
        Self::new(kept)
    }

    /// The maximum-weight hypothesis, earliest insertion order on ties.
    pub fn map_hypothesis(&self) -> &Hypothesis<L> {
        let mut best = 0;
        for i in 1..self.len() {
            if self.hypotheses[i].weight > self.hypotheses[best].weight {
                best = i;
            }
        }
        &self.hypotheses[best]
    }

    /// MAP estimate: the best hypothesis's label sequence and its stacked
    /// joint mean.
    pub fn map_extract(&self) -> (Vec<L>, DVector<f64>) {
        let best = self.map_hypothesis();
        (best.labels.clone(), best.state.recover_joint().0)
    }
}

impl MaxMixture<usize> {
    /// Data-association update: every hypothesis branches once per
    /// observation in the scan. The child assimilates its observation and
    /// inherits the parent weight times the marginal likelihood of that
    /// observation under the predicted state; weights are sup-normalized.
    pub fn da_update(&self, scan: &[DVector<f64>], model: &ModelMatrices) -> Result<Self> {
        if scan.is_empty() {
            return Err(OpmError::EmptyScan);
        }
        let mut children = Vec::with_capacity(self.len() * scan.len());
        for parent in &self.hypotheses {
            for (index, y) in scan.iter().enumerate() {
                let (state, gains) = mixed::update(&parent.state, y, model)?;
                let mut labels = parent.labels.clone();
                labels.push(index);
                children.push(Hypothesis {
                    labels,
                    weight: parent.weight * gains.likelihood,
                    state,
                });
            }
        }
        Self::new(children)
    }
}

impl MaxMixture<Source> {
    /// Outlier-model update with a single observation: each hypothesis
    /// branches into a state child that assimilates the observation with
    /// weight factor equal to the marginal likelihood, and a noise child
    /// that keeps the predicted state with weight factor `alpha` (the
    /// observation explained as background noise says nothing about the
    /// state); weights are sup-normalized.
    pub fn outlier_update(
        &self,
        y: &DVector<f64>,
        clutter: &ClutterModel,
        model: &ModelMatrices,
    ) -> Result<Self> {
        let mut children = Vec::with_capacity(self.len() * 2);
        for parent in &self.hypotheses {
            let (state, gains) = mixed::update(&parent.state, y, model)?;
            let mut state_labels = parent.labels.clone();
            state_labels.push(Source::State);
            children.push(Hypothesis {
                labels: state_labels,
                weight: parent.weight * gains.likelihood,
                state,
            });

            let mut noise_labels = parent.labels.clone();
            noise_labels.push(Source::Noise);
            children.push(Hypothesis {
                labels: noise_labels,
                weight: parent.weight * clutter.alpha(),
                state: parent.state.clone(),
            });
        }
        Self::new(children)
    }
}
