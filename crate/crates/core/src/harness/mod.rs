//! Experiment orchestration behind the command-line tool.

pub mod commands;
pub mod config;
pub mod properties;

pub use config::{Experiment, ExperimentConfig};
