//! Error type shared across the crate.

use std::path::Path;
use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the process exit code the CLI maps them to:
/// configuration problems exit with 2, data/file problems with 3, and
/// numeric or shape failures inside the solver with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed content in a data, label, or model file.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// File-system failure while reading or writing an artifact.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Invalid run configuration (schema violation, out-of-range value).
    #[error("config error: {0}")]
    Config(String),

    /// An operation was called with an argument outside its contract.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Matrix or vector dimensions do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Numeric failure: non-finite values, degenerate spectra, failed factorizations.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// Prefix message-carrying variants with a stage or repeat description;
    /// file-oriented variants already name their source and pass through.
    pub fn with_context(self, context: &str) -> Self {
        match self {
            Error::Config(msg) => Error::Config(format!("{context}: {msg}")),
            Error::InvalidParam(msg) => Error::InvalidParam(format!("{context}: {msg}")),
            Error::Shape(msg) => Error::Shape(format!("{context}: {msg}")),
            Error::Numeric(msg) => Error::Numeric(format!("{context}: {msg}")),
            other => other,
        }
    }

    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::InvalidParam(_) => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Shape(_) | Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
