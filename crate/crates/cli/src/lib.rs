//! Command implementations behind the `tdfusion` binary.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod pgm;

use thiserror::Error;

/// Exit status for a configuration problem.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when training stops on a non-finite loss.
pub const EXIT_ABORT: i32 = 3;
/// Exit status when a gradient check is out of tolerance.
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("training aborted: {0}")]
    Abort(String),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(tdfusion::Error),
}

impl From<tdfusion::Error> for CliError {
    fn from(e: tdfusion::Error) -> Self {
        use tdfusion::Error as E;
        match e {
            E::InvalidConfig(_) | E::InvalidSpec(_) | E::DatasetTooSmall { .. } | E::SceneTooLarge(_) => {
                CliError::Config(e.to_string())
            }
            E::NonFiniteLoss { .. } => CliError::Abort(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Abort(_) => EXIT_ABORT,
            CliError::Verify(_) => EXIT_VERIFY,
            _ => 1,
        }
    }
}
