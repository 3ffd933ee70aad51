use std::path::PathBuf;

use thiserror::Error;

/// Errors from the optimizer and the tooling around it.
#[derive(Debug, Error)]
pub enum ZoError {
    #[error("invalid dimension: d must be at least 1")]
    InvalidDimension,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The objective returned a non-finite value.
    #[error("oracle overflow: f evaluated to {value} at a point with {} coordinates", point.len())]
    OracleOverflow { point: Vec<f64>, value: f64 },

    #[error("horizon too short: T = {horizon} must exceed {minimum:.6}")]
    HorizonTooShort { horizon: u64, minimum: f64 },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{failed} of {trials} trials failed, above the 1% tolerance")]
    TooManyFailedRuns { failed: u64, trials: u64 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl ZoError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ZoError::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ZoError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ZoError>;
