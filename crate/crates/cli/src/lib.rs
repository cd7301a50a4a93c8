//! The `cherry` command: one subcommand per pipeline stage, sharing a TOML
//! run configuration. Stage order is enforced through the corpus manifest.

pub mod cli;
pub mod components;
pub mod config;
pub mod error;
pub mod io;
pub mod lock;
pub mod report;
pub mod stage;
pub mod stages;

pub use cli::{Cli, Command, SplitArg};
pub use config::RunConfig;
pub use error::CliError;
pub use report::StageReport;
pub use stage::Stage;
pub use stages::{run, run_with};
