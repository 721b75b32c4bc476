//! Error type shared across the simulator.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor, layout, or batch dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Non-finite values showed up where finite arithmetic is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An input violates an operation's domain (empty set, out-of-range
    /// fraction, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed IDX data; `offset` is the byte position at which parsing
    /// failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    /// I/O failure, tagged with the path involved.
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
