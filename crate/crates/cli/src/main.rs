//! `ghalab`: spectra, trajectories, verification suites and degeneracy tables
//! for the infinite well and the Morse oscillator.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 bad input.

mod commands;
mod config;
mod output;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, flags, or I/O on user paths.
    Config(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "ghalab", version, about = "Generalized Heisenberg algebra lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON file with default values; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
}

#[derive(Subcommand)]
enum Command {
    /// One-dimensional energy levels as JSON
    Spectrum(Common),
    /// Sampled 2D trajectory as CSV, optionally an SVG plot
    Trajectory(Common),
    /// Run verification suites and report every check as JSON
    Verify(Common),
    /// Degenerate 2D levels with their relations
    Degeneracies(Common),
}

fn resolve(c: Common) -> Result<RunConfig, CliError> {
    match &c.config {
        Some(path) => Ok(c.run.over(RunConfig::from_file(path)?)),
        None => Ok(c.run),
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    match cli.command {
        Command::Spectrum(c) => commands::spectrum(&resolve(c)?),
        Command::Trajectory(c) => commands::trajectory(&resolve(c)?),
        Command::Verify(c) => commands::verify(&resolve(c)?),
        Command::Degeneracies(c) => commands::degeneracies(&resolve(c)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            if out.failed {
                eprintln!("ghalab: verification failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("ghalab: {e}");
            ExitCode::from(2)
        }
    }
}
