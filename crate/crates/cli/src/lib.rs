//! Experiment orchestration for the `bondlearn` binary: configs, the
//! results table, and the subcommands behind the CLI.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod results;

pub use config::{ExperimentConfig, Method};
pub use error::CliError;
