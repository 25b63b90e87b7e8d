//! Command-line driver for the frontlab solvers: configuration parsing,
//! experiment orchestration and artifact output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;
