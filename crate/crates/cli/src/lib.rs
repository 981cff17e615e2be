//! Command-line front end: configuration files, weather input, policy
//! files and the delimited outputs of each subcommand.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod policy_file;

pub use commands::{run, Command, RunOptions};
pub use config::{Overrides, Settings};
pub use error::{CliError, ConfigError, FieldError};
