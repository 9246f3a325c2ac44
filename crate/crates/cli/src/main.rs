//! `nashlab`: spectra, heat kernels and weighted Nash bounds for
//! one-dimensional diffusions, written as CSV tables and JSON reports.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "nashlab", version, about)]
struct Cli {
    /// TOML experiment file; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving the CSV and JSON files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Eigenvalues of the discretized generator.
    Spectrum,
    /// Heat kernel table with its bound (and the Mehler kernel for OU).
    Kernel,
    /// Lyapunov constant, calibrated rate and the domination checks.
    Verify,
    /// Rate function recovered from sampled K(t).
    Converse,
    /// Nash quotient pairs of a test family and the fitted envelope.
    NashScan,
    /// Trace of P_2t against its bound.
    Trace,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let (mut cfg, base) = Config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let summary = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Kernel => commands::kernel(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Converse => commands::converse(&cfg, &base),
        Command::NashScan => commands::nash_scan(&cfg),
        Command::Trace => commands::trace(&cfg),
    }?;
    let files = summary.outputs.commit(&cli.out)?;
    if !cli.quiet {
        // A closed stdout (say, piped into `head`) is not a failed run.
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", summary.line);
        for f in &files {
            let _ = writeln!(out, "wrote {}", f.display());
        }
    }
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nashlab: {e}");
            e.exit_code()
        }
    }
}
