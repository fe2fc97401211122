//! Experiment runner for the `maternal-core` classifiers: CSV input, TOML
//! configuration, JSON model files and reports, and the `maternal` CLI.

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod persist;
pub mod pipeline;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{AppError, AppResult};
pub use pipeline::{run_experiment, Experiment};
pub use report::RunReport;
