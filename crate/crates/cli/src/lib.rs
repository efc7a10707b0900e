//! Command-line front end: time series, backend comparison, `(v₀, T)` sweeps,
//! static spectra and `N` scaling, each written as CSV with a `#` header that
//! embeds the resolved configuration.
//!
//! Settings resolve in this order, first match wins: command-line flags,
//! the `--config` document, built-in defaults.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{BackendChoice, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rzbattery", version, about = "Rosen-Zener driven Dicke quantum battery simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON config, or a CSV written by this tool (its `config` header line is used).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendChoice>,

    /// Output directory (default `rzbattery-out`).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Worker threads for independent cells (default: available cores).
    #[arg(long, global = true, value_name = "INT")]
    pub workers: Option<usize>,

    /// Asserts that the run uses no random numbers. Nothing here does, so it changes nothing.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Time series per `v0`: `v0=<v>.<backend>.csv`, plus `deviation.csv` with both backends.
    Evolve,
    /// Analytic vs numeric deviations per `v0`: `compare.csv`.
    Compare,
    /// `(v0, T)` grid of peak and terminal observables: `sweep2d.<backend>.csv`.
    Sweep2d,
    /// Static levels over a `lambda` grid, optionally joined with dynamic `E_max`: `spectrum.csv`.
    Spectrum,
    /// Numeric peaks over `N` and `lambda`: `scaling.csv`.
    Scaling,
}

impl Cli {
    /// Applies the precedence flags > config file > defaults.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if cfg.workers.is_none() {
            cfg.workers = Some(std::thread::available_parallelism().map_or(1, |n| n.get()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<commands::Outcome, CliError> {
    match command {
        Command::Evolve => commands::cmd_evolve(cfg),
        Command::Compare => commands::cmd_compare(cfg),
        Command::Sweep2d => commands::cmd_sweep2d(cfg),
        Command::Spectrum => commands::cmd_spectrum(cfg),
        Command::Scaling => commands::cmd_scaling(cfg),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.resolve().and_then(|cfg| run(cli.command, &cfg)) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("rzbattery: {e}");
            e.exit_code()
        }
    }
}
