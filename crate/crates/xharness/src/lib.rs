//! Experiment harness around `dssl_core`: JSON configs, multi-seed runs,
//! reports, method comparisons and diagnostic subcommands.

pub mod compare;
pub mod config;
pub mod density;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod report;
pub mod rules;
pub mod stats;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentRun};
pub use report::RunReport;
