//! Command-line front end: builds joint spectra, decomposes them into
//! squeezers, evaluates and inverts correlation functions, and runs the
//! Monte-Carlo photon-counting simulator, all driven by one JSON
//! configuration per run.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "squeezelab",
    version,
    about = "Characterization toolkit for spectrally multimode squeezed light"
)]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for output files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Override the configured random seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Suppress progress output
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Subcommand, Clone, Copy)]
pub enum CommandKind {
    /// Build a joint spectral amplitude and export it as CSV and JSON
    Jsa,
    /// Decompose a source into squeezer amplitudes and broadband modes
    Decompose,
    /// Evaluate closed-form correlation functions for a source
    Correlations,
    /// Invert measured correlation values into K, mu and B
    Estimate,
    /// Sample photon counts with detector loss and estimate correlations
    Simulate,
    /// Emit figure-style parameter sweeps as CSV
    Sweep,
}

/// Command error classified by exit code: config 2, domain 3, I/O 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(squeezelab::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Domain(err) => write!(f, "domain error: {err}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
