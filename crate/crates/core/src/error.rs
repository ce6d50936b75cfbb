use std::path::PathBuf;

/// Errors produced across the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter or configuration value is outside its valid domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// An interval or index lies outside the series.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    /// Mismatched vector or matrix dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Malformed input data (non-finite values, bad marginals, unknown class names).
    #[error("invalid input: {0}")]
    Input(String),

    /// A record in a JSONL file could not be decoded.
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
