//! Batch front end: parse a run configuration, solve / verify / study, and
//! write plot-ready CSV tables plus JSON reports.

pub mod config;
pub mod problem;
pub mod run;

pub use config::{parse_config, parse_config_with_overrides, ConfigError, RunConfig};
pub use run::{run_solve, run_study, run_verify, CliError, Outcome, RunOptions};
