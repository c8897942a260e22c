use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A config value failed validation; `field` is its dotted path.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot parse config {path}: {source}")]
    ConfigSyntax { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("seed {seed}: {source}")]
    Seed { seed: u64, source: dssl_core::Error },
    #[error(transparent)]
    Core(#[from] dssl_core::Error),
    #[error("cannot compare runs: {0}")]
    Mismatch(String),
}

impl HarnessError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
