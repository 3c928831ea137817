//! `dstab` command-line front end.

pub mod commands;
pub mod format;
pub mod problem_file;

pub use commands::{run, Cli, Outcome};
