//! Experiment runner for edgecast-core: TOML configs in, CSV tables out.

pub mod config;
pub mod error;
pub mod experiment;
pub mod table;

use std::path::PathBuf;

pub use config::{parse_config, ExperimentConfig, Method};
pub use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Sweep,
    Gain,
    Oracle,
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub samples: Option<usize>,
    pub restarts: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<(), CliError> {
        if let Some(seed) = self.seed {
            config.seed = seed;
            config.cccp.seed = seed;
        }
        if let Some(method) = self.method {
            config.method = method;
            if let Some(sweep) = &mut config.sweep {
                sweep.methods = Some(vec![method]);
            }
        }
        if let Some(samples) = self.samples {
            config.samples = samples;
        }
        if let Some(restarts) = self.restarts {
            config.cccp.restarts = restarts;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        config.validate()
    }
}

/// Runs a command and returns the text it writes.
pub fn run(command: Command, config: &ExperimentConfig, timings: bool) -> Result<String, CliError> {
    match command {
        Command::Solve => experiment::solve_once(config).map(|r| experiment::render_solve(&r, config)),
        Command::Sweep => experiment::run_sweep(config, timings).map(|t| experiment::render_sweep(&t, config)),
        Command::Gain => experiment::run_gain(config).map(|t| experiment::render_gain(&t, config)),
        Command::Oracle => experiment::run_oracle(config),
    }
}
