//! Command-line front end: `run`, `compare` and `sweep` over the wsnsim
//! library, with flat key/value config files and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

use clap::{Parser, Subcommand};

pub use commands::{cmd_compare, cmd_run, cmd_sweep, lifetime_ordering};
pub use config::{FileSpec, Format, RunSpec, SpecArgs, SweepArgs, SweepSpec};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "wsnsim",
    version,
    about = "Clustered wireless sensor network simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate each protocol on each seed.
    Run(SpecArgs),
    /// Simulate two or more protocols and compare their lifetimes.
    Compare(SpecArgs),
    /// Count K-means and fuzzy formation iterations over a cluster-count grid.
    Sweep(SweepArgs),
}

/// Executes a parsed command line, writing progress lines to `stdout`.
pub fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => cmd_run(&RunSpec::resolve(args)?, stdout).map(drop),
        Command::Compare(args) => cmd_compare(&RunSpec::resolve(args)?, stdout).map(drop),
        Command::Sweep(args) => cmd_sweep(&SweepSpec::resolve(args)?, stdout).map(drop),
    }
}
