//! Batch front end for the enhancement pipeline: image IO, configuration,
//! model files, reports and the subcommands behind the `smo-enhance`
//! binary.

pub mod commands;
pub mod config;
pub mod imageio;
pub mod modelfile;
pub mod report;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
