use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, {left} vs {right}")]
    DimensionMismatch {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("cannot encode field `{field}`: unknown value `{value}`")]
    Encoding { field: String, value: String },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    TrainingDiverged { epoch: usize, learning_rate: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Model file validation failures. Each malformed-file class gets its own variant.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("unsupported model format version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },

    #[error("model file is truncated: {0}")]
    Truncated(String),

    #[error("model shapes are inconsistent: {0}")]
    Shape(String),

    #[error("model file is malformed: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn dims(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
