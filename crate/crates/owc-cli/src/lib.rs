//! Library surface of the `owc` experiment runner: config parsing, CSV
//! table schemas and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod tables;
