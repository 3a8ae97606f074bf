//! File formats, configuration and subcommands of the `qtrans` tool.

mod error;

pub mod bundled;
pub mod cmfile;
pub mod commands;
pub mod config;
pub mod problem;

pub use error::Error;
