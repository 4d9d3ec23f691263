//! CLI failures and their exit codes.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("REJECT")]
    Reject,
    #[error("{0}")]
    Exhausted(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("{0}")]
    Run(#[from] liftlab::Error),
}

impl CliError {
    /// 0 success, 1 rejected signature or exhausted signer, 2 usage,
    /// 3 integrity.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Reject | CliError::Exhausted(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Integrity(_) => 3,
            CliError::Run(liftlab::Error::Exhausted(_)) => 1,
            CliError::Run(liftlab::Error::Integrity(_)) => 3,
            CliError::Run(_) => 2,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError::Usage(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;
