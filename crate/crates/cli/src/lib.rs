//! Experiment runner behind the `projwalk` binary.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::run;
pub use output::{load_measure, save_measure, RunManifest};
