use thiserror::Error;

/// Errors raised by the geometric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({u1}, {u2}) lies outside the domain")]
    OutsideDomain { u1: f64, u2: f64 },

    #[error("singular metric (det = {0:e})")]
    SingularMetric(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty sample list")]
    EmptySample,

    #[error("unsupported surface kind: {0}")]
    Unsupported(String),

    #[error("loop endpoints differ by {0:e}")]
    OpenLoop(f64),

    #[error("path endpoints mismatch: {0}")]
    PathMismatch(String),

    #[error("convexity failure: {0}")]
    Convexity(String),

    #[error("no periodic direction declared")]
    NotPeriodic,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that come from leaving a domain rather than from bad input.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::OutsideDomain { .. } | Error::PathMismatch(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
