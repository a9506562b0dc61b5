use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("IDX parse error at byte {offset}: {message}")]
    Idx { offset: usize, message: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("missing data file {path:?}: {hint}")]
    MissingData { path: PathBuf, hint: String },

    #[error("unknown optimizer {0:?}")]
    UnknownOptimizer(String),

    #[error("{0}")]
    Unsupported(String),

    #[error(
        "non-finite value at epoch {epoch}, batch {batch}{}: {what}",
        dimension.map(|d| format!(", dimension {d}")).unwrap_or_default()
    )]
    NonFinite {
        epoch: usize,
        batch: usize,
        dimension: Option<usize>,
        what: String,
    },

    #[error("I/O error on {path:?}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
