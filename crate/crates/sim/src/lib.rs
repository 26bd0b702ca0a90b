//! File formats and command-line entry points for the `vla-core` simulator.

pub mod cli;
pub mod configfile;
pub mod csv;
pub mod error;

pub use cli::{cmd_compare, cmd_run, load_config};
pub use configfile::RunConfig;
pub use error::{CliError, LoadError};
