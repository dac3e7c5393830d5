//! The `ingr` pipeline: thin commands over `ingredient_core`, each writing
//! its artifacts plus a manifest with the effective configuration and
//! input/output digests.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::RunConfig;
pub use error::CliError;
