//! Command-line front end of the `fdaloha` library: configuration, CSV
//! output, figure presets and the subcommands behind the `fdaloha` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod grid;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
