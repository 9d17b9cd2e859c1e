use std::path::PathBuf;

use thiserror::Error;

/// Errors of the experiment runner.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("I/O error at {path}: {source}", path = .0.display(), source = .1)]
    Io(PathBuf, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] dbmlab_core::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

/// Result alias for [`CliError`].
pub type Result<T> = std::result::Result<T, CliError>;
