//! Command-line front end: scenario files, subcommands and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod tables;

pub use error::CliError;
