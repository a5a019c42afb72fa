//! File formats, configuration and experiment orchestration for the `genf`
//! command-line tool. The numerics live in `genf-core`.

pub mod checkpoint;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod report;

pub use error::{CliError, Result};
