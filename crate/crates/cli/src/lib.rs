//! Experiment runner for the qubit sawtooth-map simulator: configuration,
//! drivers for the five experiments, and run manifests.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

pub use config::{resolve, EpsGrid, Experiment, ExperimentConfig, Model, Overrides, Spacing};
pub use error::CliError;
pub use manifest::{RunManifest, RunStatus};
pub use run::{rerun, run, RunReport};
