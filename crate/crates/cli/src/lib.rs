//! Experiment runner behind the `ptlz` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

pub use config::{Format, RunConfig, Scenario};
pub use error::{CliError, Result};

/// Runs a validated configuration and writes its files.
pub fn execute(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let artifacts = scenarios::run(config)?;
    output::write_artifacts(&artifacts, config.format)?;
    Ok(artifacts.into_iter().map(|a| a.path).collect())
}
