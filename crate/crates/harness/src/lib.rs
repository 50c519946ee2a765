//! Experiment harness: JSON configs, data ingestion, the full-gradient
//! baselines, multi-seed runs and curve files.

pub mod baselines;
pub mod config;
pub mod curves;
pub mod data;
pub mod error;
pub mod experiment;
pub mod gradcheck;

pub use config::ExperimentConfig;
pub use error::{HarnessError, IngestError};
pub use experiment::{run_experiment, threads_from_env, ExperimentReport, RunSummary};
