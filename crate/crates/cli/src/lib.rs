//! Command line and HTTP front end for the relation index.

pub mod api;
pub mod commands;
mod error;

pub use error::CliError;
