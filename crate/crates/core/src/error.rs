//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or shape mismatch between matrix/vector arguments.
    #[error("shape error: {0}")]
    Shape(String),

    /// A matrix required to be symmetric deviates beyond tolerance.
    #[error("matrix is not symmetric: max asymmetry {max_asymmetry:.3e} exceeds {tolerance:.1e}")]
    NotSymmetric { max_asymmetry: f64, tolerance: f64 },

    /// A matrix required to be positive semidefinite has an eigenvalue
    /// below the clamping tolerance.
    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e} below -{tolerance:.1e}")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    /// A matrix required to be positive definite failed its Cholesky check.
    #[error("{0} must be symmetric positive definite")]
    NotPd(String),

    /// A scalar argument is outside its valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A linear solve hit a numerically singular matrix.
    #[error("conditioning failure: {0}")]
    Conditioning(String),

    /// A simulated state left the finite range that the recorder accepts.
    #[error("trajectory diverged: |x| reached {value:.3e} at step {step} (seed {seed})")]
    Divergence { seed: u64, step: usize, value: f64 },

    /// Not enough data points for the requested estimate or fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Invalid arguments to a library entry point.
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid configuration file or override.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
