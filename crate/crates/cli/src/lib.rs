//! Command-line front end: TOML configs and CSV data in, JSON/text reports,
//! grid CSVs and SVG contour plots out.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod plot;
pub mod report;

pub use commands::{run, Command, Outcome, RunOptions};
pub use error::{CliError, CliResult};
