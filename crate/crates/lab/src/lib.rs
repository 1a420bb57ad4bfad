//! Experiment runner around `perch-core`: configs, checkpoints, artifacts
//! and the `perch` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod artifacts;
pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

pub use config::ExperimentConfig;
pub use error::{LabError, Result};
