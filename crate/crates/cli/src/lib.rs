//! Scenario files, orchestration and reporting for the `kgstab` binary.

pub mod config;
pub mod plot;
pub mod report;
pub mod run;
pub mod selftest;

pub use config::{parse_config, parse_str, Analysis, ConfigError, Scenario};
pub use report::Report;
pub use run::{run_scenario, run_scenario_with, RunError};
