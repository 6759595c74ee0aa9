//! Command-line front end: argument definitions, commands, model files and sweeps.

pub mod args;
pub mod commands;
pub mod model_file;
pub mod sweep;

pub use args::{Cli, Command};
pub use commands::run;
