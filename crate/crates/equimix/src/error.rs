//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by estimation, tuning, and I/O routines.
#[derive(Debug, Error)]
pub enum EquimixError {
    /// Input violated a precondition (dimensions, ranges, finiteness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix that must be positive definite is not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Matrix inversion or factorization failed on a singular input.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An estimator failed to produce a usable fit.
    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    /// Malformed input data (CSV parsing, shape mismatches).
    #[error("data error: {0}")]
    DataError(String),

    /// Configuration error (flag ranges, inconsistent settings).
    #[error("config error: {0}")]
    ConfigError(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, EquimixError>;
