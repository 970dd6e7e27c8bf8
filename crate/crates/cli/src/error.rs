use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] vanet_offload::Error),

    #[error("hybrid needs trained models: {} not found (run train-rl and train-predictor first)", .0.display())]
    MissingModel(PathBuf),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        CliError::Csv { path: path.display().to_string(), source }
    }

    /// 1 for malformed input documents, 2 for everything that fails later.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(vanet_offload::Error::Parse { .. } | vanet_offload::Error::UnknownKey(_)) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
