//! Experiment orchestration: configs, runs, aggregation, result files and
//! the predefined reproduction suites.

pub mod config;
pub mod output;
pub mod runner;
pub mod suites;

pub use config::{EnvironmentSpec, ExperimentConfig, PolicyName, PolicySpec};
pub use output::write_results;
pub use runner::{
    aggregate, run_batch, run_experiment, run_single, run_single_observed, AggregateResult,
    CheckpointSummary, RegretTrace,
};
