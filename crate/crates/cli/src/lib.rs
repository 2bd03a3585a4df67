//! Experiment runner: config ingestion, command dispatch, artifacts and the
//! acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Outcome};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
