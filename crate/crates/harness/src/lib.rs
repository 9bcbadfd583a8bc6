//! File formats, configuration, experiment suites and the command-line
//! front end for `synergy-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod suite;

pub use error::{HarnessError, Result};
