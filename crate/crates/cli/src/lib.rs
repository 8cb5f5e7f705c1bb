//! Command-line front end: configuration, scenario dispatch and data files.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{parse_config, parse_config_with_env, Command, Format, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use run::{run, RunReport};
