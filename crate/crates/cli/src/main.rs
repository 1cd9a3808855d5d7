mod commands;
mod config;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::Log;
use crate::config::RunConfig;

/// Outcome of a command, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    /// A monitored functional increased although its hypotheses held.
    Violation = 1,
    /// Hypotheses not met; reported, not a failure.
    OutOfHypothesis = 2,
    /// The flow stopped on a numerical degeneration.
    Degenerate = 3,
}

/// Malformed input: configuration, profile or CSV file.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

const INPUT_ERROR: u8 = 4;

#[derive(Parser)]
#[command(name = "ricci4", version, about = "Curvature reports, Ricci flow runs and sweeps on the 4-sphere")]
struct Cli {
    /// Output directory; `check` writes check.json only when given, the
    /// other commands default to `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized perturbation shapes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress progress and report output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topological residuals, threshold verdicts and hypothesis flags of a profile.
    Check { profile: PathBuf },
    /// Run one flow and write series, snapshots and a manifest.
    Flow {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one flow per amplitude and tabulate the verdicts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Log-scale SVG plot of CSV series.
    Plot {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Columns to plot (default: F2 and G_p, or every column).
        #[arg(long = "column")]
        columns: Vec<String>,
    },
}

fn load(path: &std::path::Path) -> Result<RunConfig> {
    RunConfig::load(path).map_err(|e| InputError(format!("{e:#}")).into())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("RICCI4_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| InputError(format!("RICCI4_THREADS = `{v}` is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Status> {
    configure_threads()?;
    let log = Log { quiet: cli.quiet };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match &cli.command {
        Command::Check { profile } => commands::check(profile, cli.out.as_deref(), &log),
        Command::Flow { config } => commands::flow(&load(config)?, cli.seed, &out, &log),
        Command::Sweep { config } => commands::sweep(&load(config)?, cli.seed, &out, &log),
        Command::Plot { files, columns } => commands::plot(files, columns, &out, &log),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(INPUT_ERROR);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(INPUT_ERROR)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
