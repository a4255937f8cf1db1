//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative density at cell {index} (value {value:e})")]
    NegativeDensity { index: usize, value: f64 },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("support radius {required} exceeds domain radius {r_max}")]
    SupportExceedsDomain { required: f64, r_max: f64 },

    #[error("target mass {target} not bracketed by the shooting family (reached {attained})")]
    MassNotBracketed { target: f64, attained: f64 },

    #[error("no zero found: trajectory still positive at r = {r_cap}")]
    NoZeroFound { r_cap: f64 },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::ConfigInvalid(msg.into())
    }
}
