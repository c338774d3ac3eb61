//! Experiment runner for `impatience-core`: TOML experiment files, versioned
//! CSV and JSON outputs, actor-critic checkpoints, parallel replication
//! sweeps and the `impatience` command line.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod error;
pub mod feeds;
pub mod output;
pub mod spec;

pub use error::{AppError, AppResult};
pub use spec::ExperimentSpec;
