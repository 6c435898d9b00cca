use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigErrors;

/// Process exit status for validation failures.
pub const EXIT_VALIDATION: u8 = 1;
/// Process exit status for numerical aborts (vacuum, NaN).
pub const EXIT_NUMERICAL: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    /// A diagnostic ran but its check failed.
    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] twofluid::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical_abort() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}
