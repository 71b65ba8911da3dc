//! Experiment harness: configuration, execution, comparison and
//! sensitivity analysis.

pub mod compare;
pub mod config;
pub mod report;
pub mod run;
pub mod sensitivity;

pub use compare::{aggregate_curves, compare, CompareReport};
pub use config::{ExperimentConfig, Thresholds};
pub use report::Format;
pub use run::{run_experiment, Manifest, RunOptions};
pub use sensitivity::{analyze, SweepFilter};
