//! Scenario files, output formats and the command implementations behind the
//! `polarsim` binary.

pub mod commands;
pub mod config;
pub mod expr;
pub mod simulate;
pub mod snapshot;
pub mod sweep;
pub mod table;

pub use config::{Scenario, ScenarioConfig};
pub use simulate::{simulate, RunSummary};

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid configuration or arguments (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while computing or writing results (exit 3).
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub(crate) fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub(crate) fn runtime(msg: impl std::fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
