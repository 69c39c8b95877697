//! Config-driven experiment runner behind the command-line tool.

pub mod config;
pub mod output;
pub mod runner;
pub mod verify;

pub use config::{ExperimentKind, RunConfig};
pub use output::{write_outcome, CSV_COLUMNS};
pub use runner::{execute, RunOutcome};
