mod artifacts;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::run::Status;

/// Build, check, and run RBF summation-by-parts operators.
#[derive(Parser)]
#[command(name = "rbfsbp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an operator; writes operator.json and verification.json.
    BuildOperator(Io),
    /// Check an operator (stored or built) against the SBP properties.
    Verify(Io),
    /// Quadrature diagnostic for plain collocation; writes diagnostic.csv.
    Diagnose(Io),
    /// Time-dependent run; writes energy.csv, solution.csv, summary.json.
    Solve(Io),
    /// Error study over several center counts; writes convergence.csv.
    Convergence(Io),
}

#[derive(clap::Args)]
struct Io {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (io, run): (&Io, fn(&ExperimentConfig, &std::path::Path) -> anyhow::Result<Status>) = match &cli.command {
        Command::BuildOperator(io) => (io, run::build_operator),
        Command::Verify(io) => (io, run::verify),
        Command::Diagnose(io) => (io, run::diagnose),
        Command::Solve(io) => (io, run::solve),
        Command::Convergence(io) => (io, run::convergence),
    };
    let result = ExperimentConfig::load(&io.config).and_then(|cfg| run(&cfg, &io.out));
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed(what)) => {
            eprintln!("checks failed: {what}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
