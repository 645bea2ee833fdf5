//! Instance files, subcommand drivers and the exit-code contract behind the
//! `mixvol` binary.

pub mod commands;
pub mod error;
pub mod instance;

pub use error::{CliError, CliResult};
pub use instance::{InstanceFile, PolytopeEntry};
