use thiserror::Error;

/// Errors raised by the model, the numerical kernels and the samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("refusing {what}: N = {n} exceeds the guard {guard} (estimated cost {cost})")]
    Guard {
        what: &'static str,
        n: usize,
        guard: usize,
        cost: String,
    },

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
