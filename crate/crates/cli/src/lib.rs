//! File formats, configuration, the threaded executor and the `npcure`
//! command line for the `npcure-core` estimators.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod parallel;

pub use error::{CliError, CliResult};
pub use parallel::RayonExecutor;
