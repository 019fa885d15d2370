use std::path::PathBuf;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unparseable or invalid configuration, with the offending field.
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("row {row} ({experiment}): no reference value and no generator")]
    MissingReference { row: usize, experiment: String },

    #[error("simulation failed: {0}")]
    Simulation(#[from] aging_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        HarnessError::Config { path: path.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv { path: path.into(), source }
    }
}
