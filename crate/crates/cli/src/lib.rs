//! Experiment runner for predictability-aware training: config files, run
//! directories, comparisons and parameter sweeps.

pub mod compare;
pub mod config;
pub mod error;
pub mod runner;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
