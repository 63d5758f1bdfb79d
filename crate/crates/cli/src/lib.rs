//! Config-driven experiment runner.

pub mod config;
pub mod experiments;

use std::path::PathBuf;

pub use config::{Experiment, ExperimentConfig, Format};
pub use experiments::{run, validate, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Invalid(bidisc_core::Error),
    #[error("{0}")]
    Compute(#[from] bidisc_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 3,
            _ => 2,
        }
    }

    /// Name printed on the diagnostic stream.
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "InvalidConfig",
            CliError::Invalid(e) | CliError::Compute(e) => e.name(),
            CliError::Io(_) => "IoError",
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Result of a complete run, ready to be written.
pub struct Report {
    pub experiment: Experiment,
    pub body: String,
    pub output: Option<PathBuf>,
    pub summary: String,
}

pub fn execute(mut cfg: ExperimentConfig, overrides: &Overrides) -> Result<Report, CliError> {
    if let Some(s) = overrides.seed {
        cfg.seed = Some(config::SeedValue::Int(s));
    }
    let output = overrides.output.clone().or_else(|| cfg.output.clone());
    let format = overrides.format.or(cfg.format).unwrap_or_default();
    let outcome = run(&cfg)?;
    let body = match format {
        Format::Json => outcome.json,
        Format::Csv => outcome.csv,
    };
    let target = output
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "-".into());
    Ok(Report {
        experiment: cfg.experiment,
        summary: format!("{}: {} -> {target}", cfg.experiment.name(), outcome.headline),
        body,
        output,
    })
}
