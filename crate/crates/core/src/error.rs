use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NpError {
    #[error("level {0} must lie strictly inside (0, 1)")]
    InvalidLevel(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-positive signal: {0}")]
    NonPositiveSignal(f64),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("aspect ratio {0} outside (0, 1)")]
    RatioOutOfRange(f64),

    #[error("unknown example id `{0}`")]
    UnknownExample(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl NpError {
    /// Stable identifier used in CSV status columns and CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            NpError::InvalidLevel(_) => "InvalidLevel",
            NpError::NotPositiveDefinite => "NotPositiveDefinite",
            NpError::DimensionMismatch { .. } => "DimensionMismatch",
            NpError::NonPositiveSignal(_) => "NonPositiveSignal",
            NpError::InsufficientSamples { .. } => "InsufficientSamples",
            NpError::RatioOutOfRange(_) => "RatioOutOfRange",
            NpError::UnknownExample(_) => "UnknownExample",
            NpError::InvalidConfig(_) => "InvalidConfig",
            NpError::InvalidData(_) => "InvalidData",
            NpError::Io { .. } => "Io",
            NpError::Csv { .. } => "Csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NpError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        NpError::Csv { path: path.into(), source }
    }
}

pub type Result<T, E = NpError> = std::result::Result<T, E>;
