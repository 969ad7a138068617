//! Experiment harness around `plsgd-core`: configuration, the `run`,
//! `verify` and `sweep` commands, and their CSV and text outputs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification failure,
//! 3 divergence of every run, 4 numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod plan;

pub use commands::{cmd_run, cmd_sweep, cmd_verify};
pub use config::Config;
pub use error::CliError;
