//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Argument on a branch cut or at a branch point.
    #[error("branch point or cut: {0}")]
    BranchPoint(String),

    /// An iteration (Newton, fixed point, continued fraction) failed to
    /// converge within its budget.
    #[error("convergence failure: {0}")]
    NonConvergence(String),

    /// Quadrature rules of increasing order disagree beyond tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// Requested accuracy is not reachable with the configured backend.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    /// Overflow/underflow past the representable range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// The stored grid cannot resolve a requested phase or oscillation.
    #[error("resolution: {0}")]
    Resolution(String),

    /// Kernel or model selector not valid for the requested operation.
    #[error("unsupported kind: {0}")]
    UnsupportedKind(String),

    /// Malformed input (grid, parameter file, configuration).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
