//! Discrete outer probability measures: a possibility function over a finite
//! parameter set paired with a conditional probability law over a finite
//! outcome set, evaluated with either operator ordering.

use crate::error::{OpmError, Result};
use crate::possibility::{GridPoint, PossibilityGrid};

/// Tolerance for conditional laws summing to one.
const LAW_SUM_TOL: f64 = 1e-12;

/// Order in which the supremum and the expectation are applied when
/// evaluating a test function against a [`DiscreteOpm`].
///
/// The two orderings model different experiments and do not agree in
/// general; for nonnegative test functions the sup-outer value never exceeds
/// the mean-outer value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOrder {
    /// Supremum over parameters applied outside the expectation:
    /// `max_t f(t) * sum_x p(x|t) phi(t, x)`.
    SupOuter,
    /// Expectation applied outside the supremum:
    /// `sum_x p(x) * max_t f(t) phi(t, x)`. Only defined when the conditional
    /// law does not depend on the parameter.
    MeanOuter,
}

/// A possibility function over parameters combined with a parametrized
/// probability law over outcomes.
#[derive(Debug, Clone)]
pub struct DiscreteOpm<P, X> {
    parameters: PossibilityGrid<P>,
    outcomes: Vec<X>,
    /// `laws[t][x]` is the probability of outcome `x` given parameter `t`.
    laws: Vec<Vec<f64>>,
}

impl<P: GridPoint, X: Clone + PartialEq> DiscreteOpm<P, X> {
    pub fn new(
        parameters: PossibilityGrid<P>,
        outcomes: Vec<X>,
        laws: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(OpmError::InvalidArgument("empty outcome set".into()));
        }
        if laws.len() != parameters.len() {
            return Err(OpmError::DimensionMismatch(format!(
                "{} laws vs {} parameters",
                laws.len(),
                parameters.len()
            )));
        }
        for law in &laws {
            if law.len() != outcomes.len() {
                return Err(OpmError::DimensionMismatch(format!(
                    "law of length {} vs {} outcomes",
                    law.len(),
                    outcomes.len()
                )));
            }
            let mut sum = 0.0;
            for (index, &value) in law.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(OpmError::InvalidValue { index, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > LAW_SUM_TOL {
                return Err(OpmError::NotAProbability(sum));
            }
        }
        Ok(Self {
            parameters,
            outcomes,
            laws,
        })
    }

    pub fn parameters(&self) -> &PossibilityGrid<P> {
        &self.parameters
    }

    pub fn outcomes(&self) -> &[X] {
        &self.outcomes
    }

    pub fn law(&self, parameter_index: usize) -> &[f64] {
        &self.laws[parameter_index]
    }

    /// True when every parameter indexes the same conditional law.
    pub fn law_is_parameter_free(&self) -> bool {
        self.laws.windows(2).all(|w| {
            w[0].iter()
                .zip(&w[1])
                .all(|(a, b)| (a - b).abs() <= LAW_SUM_TOL)
        })
    }

    /// Evaluates a bounded test function under the chosen operator ordering.
    pub fn upper_expectation<F>(&self, phi: F, order: EvalOrder) -> Result<f64>
    where
        F: Fn(&P, &X) -> f64,
    {
        match order {
            EvalOrder::SupOuter => {
                let mut best = f64::NEG_INFINITY;
                for (t_index, (t, &f)) in self
                    .parameters
                    .points()
                    .iter()
                    .zip(self.parameters.values())
                    .enumerate()
                {
                    let mean: f64 = self.laws[t_index]
                        .iter()
                        .zip(&self.outcomes)
                        .map(|(&p, x)| p * phi(t, x))
                        .sum();
                    best = best.max(f * mean);
                }
                Ok(best)
            }
            EvalOrder::MeanOuter => {
                if !self.law_is_parameter_free() {
                    return Err(OpmError::LawDependsOnParameter);
                }
                let law = &self.laws[0];
                let mut total = 0.0;
                for (&p, x) in law.iter().zip(&self.outcomes) {
                    let sup = self
                        .parameters
                        .points()
                        .iter()
                        .zip(self.parameters.values())
                        .map(|(t, &f)| f * phi(t, x))
                        .fold(f64::NEG_INFINITY, f64::max);
                    total += p * sup;
                }
                Ok(total)
            }
        }
    }

    /// Credibility of an outcome event: the sup-outer evaluation of its
    /// indicator.
    pub fn event_credibility<E>(&self, event: E) -> f64
    where
        E: Fn(&X) -> bool,
    {
        self.upper_expectation(|_, x| if event(x) { 1.0 } else { 0.0 }, EvalOrder::SupOuter)
            .expect("sup-outer evaluation cannot fail")
    }
}
