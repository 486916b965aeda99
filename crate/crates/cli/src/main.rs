//! `ebcd`: fit sparse PCA models, run the simulation study, score fits and
//! compress data matrices to their Gram factor.

mod commands;
mod error;
mod fit;
mod io;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ebcd", version, about = "Sparse PCA by empirical Bayes covariance decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model and write the result as JSON.
    Fit(fit::FitArgs),
    /// Run seeded replicates of a simulation scenario and write metrics as CSV.
    Simulate(commands::SimulateArgs),
    /// Score a saved fit against known components and covariance.
    Metrics(commands::MetricsArgs),
    /// Write a compact matrix C with CᵀC = XᵀX.
    Gram(commands::GramArgs),
}

fn print_unless_saved(text: &str, saved: bool) -> Result<(), CliError> {
    if !saved {
        std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(args) => print_unless_saved(&fit::run(&args)?, args.out.is_some()),
        Command::Simulate(args) => print_unless_saved(&commands::simulate(&args)?, args.out.is_some()),
        Command::Metrics(args) => print_unless_saved(&commands::metrics(&args)?, args.out.is_some()),
        Command::Gram(args) => commands::gram(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
