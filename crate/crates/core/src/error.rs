//! Error type shared across the library.
//!
//! Variants mirror the process exit contract of the CLI: validation
//! failures, I/O failures, numerical failures, and mode-matching failures
//! map to distinct exit codes.

use std::path::PathBuf;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid arguments, configuration, or malformed input data.
    #[error("validation error: {0}")]
    Validation(String),

    /// Filesystem failure on the named path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content; `detail` names the offending row/column/field.
    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },

    /// Numerical failure (non-convergence, singular system, degenerate data).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Mode matching between two models failed.
    #[error("mode matching error: {0}")]
    Matching(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn matching(msg: impl Into<String>) -> Self {
        Error::Matching(msg.into())
    }
}
