//! Command-line front end: config ingestion, experiment orchestration,
//! certificate emission and the lemma battery.

pub mod battery;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub use commands::{run, Command, Format, Invocation};
pub use config::Config;
pub use report::{Report, ResultBlock, Status};

pub const TOOL: &str = "relind";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] relind_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

/// 2 for configuration errors, 3 for budget errors, 1 for named mathematical failures.
pub fn core_exit_code(e: &relind_core::Error) -> i32 {
    if e.is_configuration() {
        2
    } else if e.is_resource() {
        3
    } else {
        1
    }
}
