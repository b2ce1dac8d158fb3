use thiserror::Error;

/// Errors raised by the estimate evaluators, the geometry and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HornError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not defined for this configuration (wrong monotone class, bad grid, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// A root finder could not bracket or converge.
    #[error("solver error: {msg} (bracket [{lo:e}, {hi:e}])")]
    Solver { msg: String, lo: f64, hi: f64 },
    /// A geometric postcondition failed.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Malformed configuration text or values.
    #[error("config error: {0}")]
    Config(String),
}

impl HornError {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, HornError::Usage(_) | HornError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, HornError>;

pub(crate) fn domain(msg: impl Into<String>) -> HornError {
    HornError::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> HornError {
    HornError::Usage(msg.into())
}
