//! Command-line driver: configuration, the preprocessing pipeline, run
//! artifacts and rendering.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod render;
pub mod run;
pub mod simulate;

pub use error::{CliError, CliResult};
