//! Possibilistic inference with outer probability measures.
//!
//! An outer probability measure pairs a possibility function over unknown
//! deterministic parameters with probability laws for the random phenomena
//! those parameters drive, and evaluates test functions by a supremum over
//! parameters of the expected value. This crate implements the resulting
//! calculus and the filters built on it:
//!
//! - [`possibility`]: possibility functions on finite grids (normalization,
//!   marginals, conditioning, Bayes updates, pushforward/pullback, expected
//!   value and variance, independence checks);
//! - [`discrete`]: discrete outer probability measures with both operator
//!   orderings;
//! - [`gaussian`]: normal possibility functions and densities in closed
//!   form;
//! - [`mixed`]: Kalman-style filtering of a state with a random block and a
//!   deterministic block, with a marginal-likelihood by-product;
//! - [`hypothesis`]: max-mixture filters over label hypotheses for data
//!   association and outlier-robust tracking, with pruning and merging;
//! - [`bandit`]: a two-bandit decision example under a categorical
//!   likelihood;
//! - [`sim`]: the simulation scenario, both filter pipelines, metrics and a
//!   seeded parallel Monte Carlo driver.

pub mod bandit;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod hypothesis;
mod linalg;
pub mod mixed;
pub mod possibility;
pub mod sim;

pub use error::{OpmError, Result};
