//! Command-line driver for the `gefcrit` experiments.
//!
//! Every experiment subcommand resolves a [`RunConfig`], runs on a rayon pool
//! of the requested size and writes one run directory containing
//! `manifest.json`, CSV results, `summary.json`, `summary.txt` and SVG
//! plots. `report` re-reads a run directory and checks that every file
//! belongs to its manifest.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod summary;

pub use config::{Command, FileConfig, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use summary::{Check, Summary};

/// Version recorded in manifests and mixed into the manifest hash.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status when every fatal check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status for operational errors.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a statistical check fell outside its band.
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gefcrit", version, about = "Critical points of Gaussian entire functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Monte-Carlo intensities, ordinate histograms and point plots.
    Simulate(Overrides),
    /// Kac-Rice intensities and ordinate densities by quadrature.
    KacRice(Overrides),
    /// Jet covariance assembly and empirical kernel checks.
    VerifyKernels(Overrides),
    /// Hermite-function STFT identity and white-noise spectrogram check.
    VerifyStft(Overrides),
    /// Gradient-flow basins of the zeros (exploratory).
    Basins(Overrides),
    /// Verifies a run directory against its manifest and prints its summary.
    Report {
        /// Run directory written by an earlier command.
        run_dir: PathBuf,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_dir: PathBuf,
    pub summary: Summary,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<Outcome> {
    let (command, overrides) = match cli.command {
        Sub::Report { run_dir } => {
            let summary = commands::report(&run_dir)?;
            return Ok(Outcome { run_dir, summary });
        }
        Sub::Simulate(o) => (Command::Simulate, o),
        Sub::KacRice(o) => (Command::KacRice, o),
        Sub::VerifyKernels(o) => (Command::VerifyKernels, o),
        Sub::VerifyStft(o) => (Command::VerifyStft, o),
        Sub::Basins(o) => (Command::Basins, o),
    };
    let cfg = RunConfig::resolve(command, &overrides)?;
    run_config(&cfg)
}

/// Runs a resolved configuration and writes its run directory.
pub fn run_config(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    let start = Instant::now();
    let hash = cfg.hash(VERSION);
    let mut writer = output::RunWriter::create(cfg, &hash)?;
    let summary = pool.install(|| commands::dispatch(cfg, &mut writer))?;
    let run_dir = writer.finish(cfg, &summary, start.elapsed().as_secs_f64())?;
    Ok(Outcome { run_dir, summary })
}
