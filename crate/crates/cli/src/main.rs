//! Config-driven experiment runner for the gas-dynamics laboratory.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 selection
//! tie unresolved (the report is still written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "eulerlab",
    version,
    about = "Finite-volume experiments for the complete Euler system: simulation, exact Riemann references, consistency studies, and ensemble selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset expanded to a full config (written to the output dir).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for ensemble members and refinement runs.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme and store the trajectory plus a conservation summary.
    Simulate(RunArgs),
    /// Solve the Riemann problem exactly: star state, wave speeds, profile CSV.
    Riemann(RunArgs),
    /// Refinement study of the weak-form residuals.
    Consistency(RunArgs),
    /// Run an ensemble, compute its diagnostics, and select a member.
    EnsembleSelect(RunArgs),
}

fn load(args: &RunArgs) -> Result<config::ExperimentConfig, CliError> {
    match (&args.config, &args.preset) {
        (Some(path), None) => config::load_config(path).map_err(CliError::Config),
        (None, Some(name)) => config::preset(name).map_err(CliError::Config),
        _ => Err(CliError::Config(anyhow::anyhow!(
            "give exactly one of --config or --preset"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Riemann(a) => ("riemann", a),
        Command::Consistency(a) => ("consistency", a),
        Command::EnsembleSelect(a) => ("ensemble-select", a),
    };
    let config = match load(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    };
    match commands::run(name, &config, &args.out, args.workers) {
        Ok(code) => {
            if code != 0 {
                eprintln!("warning: selection tie unresolved; report written");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
