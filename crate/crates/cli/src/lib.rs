//! Command-line driver for the SMPBE hybrid solver.

pub mod config;
pub mod output;
pub mod run;

pub use config::{BoundaryKind, Format, Scan, Scenario, Settings};
pub use run::{run, RunOutcome, RunSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] smpbe_core::SmpbeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("solver diverged: {0}")]
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Diverged(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
