//! Library side of the `lowregret` command-line tool: spec parsing,
//! experiment configs, and the subcommands.

pub mod battery;
pub mod commands;
pub mod config;
pub mod error;
pub mod spec;
