//! Batch front-end: JSON experiment configs in, data files out.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod scaling;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use pipeline::{run_experiment, Bundle, Experiment, RunReport};

/// Default output root when `--out` is not given.
pub const OUT_ENV: &str = "RYDWIRE_OUT";
