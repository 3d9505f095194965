use thiserror::Error;

/// Errors surfaced by graph construction, conjugate solves and simulation runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure in {what}: residual {residual:e}")]
    NumericFailure { what: &'static str, residual: f64 },

    #[error("clock regression: requested t={requested} before last sync t={last}")]
    ClockRegression { requested: f64, last: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("window [{start}, {end}) invalid: {reason}")]
    InvalidWindow {
        start: usize,
        end: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
