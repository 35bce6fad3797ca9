use std::io;
use std::path::PathBuf;

use mimo_dmt::DmtError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for `{field}`: {detail}")]
    Config { field: String, detail: String },

    #[error("cannot read config {path}: {detail}")]
    ConfigFile { path: PathBuf, detail: String },

    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("every grid point failed; first error: {0}")]
    AllPointsFailed(DmtError),

    #[error(transparent)]
    Model(#[from] DmtError),
}

impl CliError {
    pub fn config(field: impl Into<String>, detail: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage, config and I/O problems; 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AllPointsFailed(_) | CliError::Model(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
