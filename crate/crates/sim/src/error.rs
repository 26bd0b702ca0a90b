use std::path::PathBuf;

use thiserror::Error;
use vla_core::{ConfigError, SimError};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] LoadError),
    #[error("simulation failed: {0}")]
    Sim(SimError),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Config(LoadError::Invalid(c)),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Sim(_) | CliError::Write { .. } => 1,
        }
    }
}
