use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} is below the clock origin {origin}")]
    Domain { t: f64, origin: f64 },

    #[error("cumulative value {value} is outside the clock range [0, {sup})")]
    Range { value: f64, sup: f64 },

    #[error("integral diverges on [{from}, {to}]")]
    Divergence { from: f64, to: f64 },

    #[error("unsupported rate form for {0}")]
    UnsupportedForm(String),

    #[error("truncation bound {bound:e} exceeds tolerance at cap {cap}; raise the cap")]
    TruncationInsufficient { cap: usize, bound: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("depth distribution has no mass")]
    EmptySupport,

    #[error("integration did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate regression: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
