use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the transforms, the ROM pipeline and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("relative error undefined: reference field has zero {0} norm")]
    ZeroNorm(&'static str),

    #[error("signal has zero mass and regularisation is disabled")]
    ZeroMass,

    #[error("field contains negative values (min {min}); use the signed RCDT variant")]
    NegativeValues { min: f64 },

    #[error("transport map is not strictly increasing at index {index}")]
    NonMonotone { index: usize },

    #[error("domain mismatch: signal {signal:?}, reference {reference:?}")]
    DomainMismatch {
        signal: (f64, f64),
        reference: (f64, f64),
    },

    #[error("duplicate training parameter {0:?}")]
    DuplicateParameter(Vec<f64>),

    #[error("singular value decomposition failed: {0}")]
    Decomposition(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("study stage `{stage}` failed: {source}")]
    Study {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failing computation
    /// or the environment. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::ShapeMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::ZeroNorm(_)
            | Error::ZeroMass
            | Error::NegativeValues { .. }
            | Error::DomainMismatch { .. }
            | Error::DuplicateParameter(_)
            | Error::Parse { .. } => true,
            Error::Study { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
