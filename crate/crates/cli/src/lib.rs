//! Experiment driver: configuration parsing, CSV reports and the run loop
//! behind the `platoon` binary.

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, ExperimentSpec, Mode, SchemeSelection};
pub use run::{run, RunError, RunReport};

/// Written into every report for reproducibility.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
