//! Harness-level errors: configuration problems name the offending key.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse config {}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },

    #[error("config key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error(transparent)]
    Core(#[from] fedsim_core::Error),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed metrics csv {} (line {line}): {message}", path.display())]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl CliError {
    pub(crate) fn config_value(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::ConfigValue {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
