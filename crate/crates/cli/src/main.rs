//! `madc`: build MapReduce arrays, simulate the coded shuffle and print load
//! reports.
//!
//! Exit status is 0 on success, 1 when a validation or verification check
//! fails, and 2 for usage and I/O errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "madc", version, about = "Coded MapReduce from Steiner systems")]
struct Cli {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect and validate designs.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Work with MapReduce arrays.
    #[command(subcommand)]
    Mra(MraCommand),
    /// Run Map, Shuffle and Reduce end to end and check the result.
    Simulate(SimulateArgs),
    /// Compare the design-based topology with the combinatorial topology.
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
enum DesignCommand {
    /// Validate a design file.
    Validate { path: PathBuf },
    /// List the built-in designs.
    Catalog,
}

#[derive(Debug, Subcommand)]
enum MraCommand {
    /// Build the array for a design and write it as CSV.
    Build {
        /// Catalog name or path to a design file.
        #[arg(long)]
        design: String,
        /// Output path; CSV goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Catalog name or path to a design file.
    #[arg(long)]
    pub design: String,
    /// Files per batch.
    #[arg(long, default_value_t = 1)]
    pub eta1: usize,
    /// Output functions per reducer.
    #[arg(long, default_value_t = 1)]
    pub eta2: usize,
    /// Requested IV size in bits, rounded up to the nearest valid size.
    #[arg(long, default_value_t = madc::engine::DEFAULT_BETA)]
    pub beta: usize,
    /// Fail instead of rounding an invalid --beta.
    #[arg(long)]
    pub strict_beta: bool,
    #[arg(long, env = "MADC_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the coded symbols as JSON.
    #[arg(long)]
    pub dump_transcript: Option<PathBuf>,
    /// Write the mapper/reducer wiring as JSON.
    #[arg(long)]
    pub dump_topology: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub lambda: usize,
    #[arg(long)]
    pub alpha: usize,
    #[arg(long)]
    pub t: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        madc::Exec::Sequential
    } else {
        madc::Exec::Parallel
    };
    let result = match cli.command {
        Command::Design(DesignCommand::Validate { path }) => {
            commands::design_validate(&path, cli.format)
        }
        Command::Design(DesignCommand::Catalog) => commands::design_catalog(cli.format),
        Command::Mra(MraCommand::Build { design, out }) => {
            commands::mra_build(&design, out.as_deref(), cli.format, exec)
        }
        Command::Simulate(args) => commands::simulate(&args, cli.format, exec),
        Command::Compare(args) => commands::compare(&args, cli.format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err.error);
            ExitCode::from(err.code)
        }
    }
}
