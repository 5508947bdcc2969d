//! Experiment runner behind the `spikelab` binary: configuration, the six
//! modes, and the run manifest.

pub mod cli;
pub mod config;
pub mod modes;
pub mod output;

pub use config::{ExperimentConfig, Mode};
pub use modes::{run, RunOutcome};

/// Exit status when every step succeeded but a validation criterion failed.
pub const EXIT_CRITERION_FAILED: i32 = 2;
