//! File formats, configuration and the `sbza` command-line tool.

pub mod cli;
pub mod config;
pub mod io;
