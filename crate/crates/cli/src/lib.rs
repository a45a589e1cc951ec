//! Command-line front end: configuration files, the model file format,
//! report records and the `train` / `predict` / `algebra` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod modelfile;
pub mod report;

pub use error::{CliError, CliResult};

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "CONTILEARN_THREADS";

/// Reads the worker cap from the environment.
pub fn thread_cap() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a count, got {v:?}"))),
    }
}
