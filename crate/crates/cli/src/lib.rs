//! Command-line front end: scenario files in, CSV and JSON lines out.

pub mod audit;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod seed;
pub mod selftest;
pub mod sweep;

pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
