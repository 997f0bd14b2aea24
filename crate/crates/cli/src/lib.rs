//! Library side of the `eife` command: config parsing, output writers and
//! the three subcommands.

pub mod commands;
pub mod config;
pub mod output;

use eife_core::EifeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(EifeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<EifeError> for CliError {
    fn from(e: EifeError) -> Self {
        match e {
            EifeError::Config(msg) => CliError::Config(msg),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for solver failures such as a
    /// maximum-bound violation, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
