//! Configuration and experiment drivers behind the `sdt` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};
pub use run::{run_experiment, Outcome, RunError};
