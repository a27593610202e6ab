//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by possibility-calculus and filtering operations.
#[derive(Debug, Error)]
pub enum OpmError {
    /// Input values for a possibility function were all zero (or empty), so
    /// sup-normalization is undefined.
    #[error("cannot normalize: no strictly positive value in input")]
    Degenerate,

    /// A value that must be finite and nonnegative was not.
    #[error("invalid value {value} at index {index}: must be finite and nonnegative")]
    InvalidValue { index: usize, value: f64 },

    /// Conditioning was requested on a point with zero marginal possibility.
    #[error("conditioning on incredible point (marginal possibility is zero)")]
    IncrediblePoint,

    /// Bayes update where prior times likelihood is identically zero.
    #[error("incompatible evidence: supremum of prior times likelihood is zero")]
    IncompatibleEvidence,

    /// Pullback through a map whose image is entirely incredible.
    #[error("incredible image: possibility is zero on the whole image of the map")]
    IncredibleImage,

    /// A map landed outside the domain of the possibility function it is
    /// composed with.
    #[error("map produced a point outside the grid domain")]
    PointNotInDomain,

    /// Mismatched dimensions between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix that must be symmetric positive definite failed the check.
    #[error("matrix not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A matrix that must be symmetric was not (within tolerance).
    #[error("matrix not symmetric: {0}")]
    NotSymmetric(String),

    /// The mode of a possibility function sits on the grid boundary, so the
    /// central second difference is undefined.
    #[error("argmax lies on the grid boundary: second difference undefined")]
    BoundaryMode,

    /// An operation needed a uniform one-dimensional real grid.
    #[error("operation requires a uniform 1-D real grid: {0}")]
    NotRealGrid(String),

    /// A probability vector did not sum to one within tolerance.
    #[error("conditional law does not sum to 1 (sum = {0})")]
    NotAProbability(f64),

    /// The second operator ordering is only defined when the conditional law
    /// does not depend on the parameter.
    #[error("mean-outer evaluation requires a parameter-independent conditional law")]
    LawDependsOnParameter,

    /// A point claimed to lie on the simplex did not.
    #[error("point is not on the probability simplex: {0}")]
    OffSimplex(String),

    /// Invalid configuration or constructor argument.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An observation scan was empty where at least one observation is needed.
    #[error("empty observation scan")]
    EmptyScan,
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, OpmError>;
