//! Command-line front end: configuration files, scans and deterministic
//! JSON/CSV artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod table;

pub use commands::{run, Artifact, Command};
pub use config::{ExperimentConfig, Format, ScanConfig};
pub use error::{CliError, ErrorKind};
