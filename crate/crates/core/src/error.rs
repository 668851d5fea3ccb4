//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by problem construction and the landscape/factorized
/// operations. Solver-specific failures (divergence) live in
/// [`crate::solvers::SolveError`] because they carry the partial trace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The product `UVᵀ` has numerical rank below `r`; the caller must route
    /// to the degenerate path.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A full-rank point was passed to an operation that only applies to
    /// rank-deficient products.
    #[error("input is not degenerate: {0}")]
    NotDegenerate(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A dense decomposition lost too much accuracy to trust the result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Consensus deviation exceeded the tolerance when lifting a distributed
    /// state to a centralized pair.
    #[error("refusing to lift: {0}")]
    RefuseToLift(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn dim_mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
