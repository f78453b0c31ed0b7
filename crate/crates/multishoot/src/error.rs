//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by model evaluation and problem construction.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("model evaluation produced non-finite values at node {node}")]
    NonFinite { node: usize },
    #[error("constraint Jacobian h_u at node {node} is rank deficient: rank {rank} < {nh}")]
    RankDeficient { node: usize, rank: usize, nh: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// Recoverable factorization failures. The solver reacts to these by
/// increasing the regularization instead of aborting.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum FactorError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is numerically singular")]
    Singular,
}

/// Terminal solver failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("regularization exceeded its upper clamp; the solver failed to make progress")]
    RegularizationExhausted,
    #[error("trajectory does not match problem dimensions: {0}")]
    BadInitialGuess(String),
}
