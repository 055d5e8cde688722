use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("{what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feature combination {combination} requires {field}")]
    MissingField {
        combination: u8,
        field: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("value {value} lies outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to serialize report: {0}")]
    Serialize(String),
}

impl Error {
    /// True when the error was caused by the caller's input rather than by
    /// the environment (disk, serialization).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Write { .. } | Error::Serialize(_))
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Write {
            path: path.into(),
            source,
        }
    }
}
