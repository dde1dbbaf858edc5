use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MzError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration produced a non-finite state at t = {t}")]
    IntegrationFailure { t: f64 },

    #[error("sample time {got} does not continue the uniform grid (expected {expected})")]
    NonUniformSample { expected: f64, got: f64 },

    #[error("no root of the matching polynomial in (0, 1)")]
    NoRootInRange,

    #[error("matching equation is degenerate (both sides vanish)")]
    DegenerateEquation,

    #[error("estimator history would exceed the cap of {cap} samples")]
    HistoryCapExceeded { cap: usize },
}

pub type Result<T> = std::result::Result<T, MzError>;
