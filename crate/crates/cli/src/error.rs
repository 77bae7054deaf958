use std::path::PathBuf;

use aptf::AptfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] AptfError),
}

impl CliError {
    pub const CONFIG_EXIT: u8 = 2;
    pub const RUNTIME_EXIT: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => Self::CONFIG_EXIT,
            _ => Self::RUNTIME_EXIT,
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
