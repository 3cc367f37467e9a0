//! File-based driver around the search engine: benchmark generation, search
//! runs, brute-force oracle runs and reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use config::RunConfig;
pub use error::{CliError, Result};
