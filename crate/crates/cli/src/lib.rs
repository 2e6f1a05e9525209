//! Command-line front end: configuration, experiment commands and SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

pub use config::{RunConfig, Setup};
pub use error::CliError;
