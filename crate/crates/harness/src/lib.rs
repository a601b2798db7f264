//! Seeded scenario runner over the uepsim-core models: a video trace, one
//! protection mechanism and a lossy channel in, quality and overhead
//! reports out.

pub mod config;
pub mod output;
pub mod runner;

use thiserror::Error;

pub use config::ScenarioConfig;
pub use runner::{compare_mechanisms, run_scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("i/o: {0}")]
    Io(String),
    #[error("simulation: {0}")]
    Sim(String),
}

impl HarnessError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Sim(_) => 1,
        }
    }
}
