//! Experiment runner behind the `bjlab` command line tool.
//!
//! A run is described by a TOML file (see [`parse_config`]) and produces one
//! CSV row per trial plus a JSON summary. Every trial draws from its own
//! ChaCha8 stream `(seed, stream = epsilon_index * trials + trial)`, so the
//! rows do not depend on how many worker threads execute them.

mod config;
mod report;
mod run;

use thiserror::Error;

pub use config::{parse_config, ExperimentConfig, Mode, DEFAULT_TOL, DEFAULT_TRIALS};
pub use report::{Outcome, RunReport, Summary, TrialRow, CSV_VERSION};
pub use run::{run, trial_rng};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] crate::error::Error),
}

impl HarnessError {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code: 1 for configuration and I/O problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Io(_) => 1,
            HarnessError::Core(_) => 2,
        }
    }
}
