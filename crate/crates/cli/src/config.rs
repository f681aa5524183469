//! Effective run configuration: defaults, overlaid by a flat TOML file,
//! overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gefcrit::experiments::{ExperimentConfig, PointProcess};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GEFCRIT_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "gefcrit-runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    KacRice,
    VerifyKernels,
    VerifyStft,
    Basins,
    Report,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Simulate => "simulate",
            Command::KacRice => "kac-rice",
            Command::VerifyKernels => "verify-kernels",
            Command::VerifyStft => "verify-stft",
            Command::Basins => "basins",
            Command::Report => "report",
        };
        f.write_str(s)
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Point process for `simulate`, e.g. `max` or `hermite_r_zeros(2)`.
    pub kind: String,
    pub region_radius: f64,
    pub buffer: f64,
    pub truncation_tol: f64,
    pub grid_step: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub bins: usize,
    /// Monte-Carlo draws per kernel check.
    pub draws: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let exp = ExperimentConfig::default();
        let output_dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR));
        Self {
            command,
            kind: "critical".into(),
            region_radius: exp.region_radius,
            buffer: exp.buffer,
            truncation_tol: exp.truncation_tol,
            grid_step: exp.grid_step,
            realizations: exp.realizations,
            master_seed: exp.seed,
            bins: 40,
            draws: 100_000,
            output_dir,
            threads: 0,
        }
    }

    /// Defaults, then `overrides.config` if given, then the explicit flags.
    pub fn resolve(command: Command, overrides: &Overrides) -> Result<Self> {
        let mut cfg = Self::defaults(command);
        if let Some(path) = &overrides.config {
            cfg.apply_file(&FileConfig::load(path)?);
        }
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: &FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = f.$field.clone() { self.$field = v; })*
            };
        }
        take!(kind, region_radius, buffer, truncation_tol, grid_step, realizations, master_seed, bins, draws, output_dir, threads);
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = o.$flag.clone() { self.$field = v; })*
            };
        }
        take!(
            kind <- kind,
            region_radius <- radius,
            buffer <- buffer,
            truncation_tol <- truncation_tol,
            grid_step <- grid_step,
            realizations <- realizations,
            master_seed <- seed,
            bins <- bins,
            draws <- draws,
            output_dir <- output_dir,
            threads <- threads
        );
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(CliError::InvalidField {
                field,
                reason: reason.to_string(),
            })
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.region_radius) {
            return bad("region_radius", "must be a positive number");
        }
        if !(self.buffer.is_finite() && self.buffer >= 0.0) {
            return bad("buffer", "must be a non-negative number");
        }
        if !(positive(self.truncation_tol) && self.truncation_tol < 1.0) {
            return bad("truncation_tol", "must lie in (0, 1)");
        }
        if !positive(self.grid_step) || self.grid_step > self.region_radius {
            return bad("grid_step", "must be positive and at most region_radius");
        }
        if self.realizations < 2 {
            return bad("realizations", "must be at least 2");
        }
        if self.bins == 0 {
            return bad("bins", "must be at least 1");
        }
        if self.draws < 2 {
            return bad("draws", "must be at least 2");
        }
        if self.command == Command::Simulate {
            self.process()?;
        }
        Ok(())
    }

    pub fn process(&self) -> Result<PointProcess> {
        self.kind.parse().map_err(|e: gefcrit::Error| CliError::InvalidField {
            field: "kind",
            reason: e.to_string(),
        })
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            region_radius: self.region_radius,
            buffer: self.buffer,
            truncation_tol: self.truncation_tol,
            grid_step: self.grid_step,
            realizations: self.realizations,
            seed: self.master_seed,
        }
    }

    /// SHA-256 over the fields that determine the results. The output
    /// directory and thread count are left out: they do not change a single
    /// output byte.
    pub fn hash(&self, version: &str) -> String {
        let key = serde_json::json!({
            "version": version,
            "command": self.command,
            "kind": self.kind,
            "region_radius": self.region_radius,
            "buffer": self.buffer,
            "truncation_tol": self.truncation_tol,
            "grid_step": self.grid_step,
            "realizations": self.realizations,
            "master_seed": self.master_seed,
            "bins": self.bins,
            "draws": self.draws,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

/// Contents of a config file; every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kind: Option<String>,
    pub region_radius: Option<f64>,
    pub buffer: Option<f64>,
    pub truncation_tol: Option<f64>,
    pub grid_step: Option<f64>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
    pub bins: Option<usize>,
    pub draws: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

/// Flags shared by the experiment subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML file with any of the keys of the run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Point process: zeros, critical, max, saddle, holo_critical,
    /// hermite_r_zeros(R), bientire_zeros.
    #[arg(long)]
    pub kind: Option<String>,
    /// Radius of the reporting disk.
    #[arg(long, allow_hyphen_values = true)]
    pub radius: Option<f64>,
    /// Extra search radius beyond the disk.
    #[arg(long, allow_hyphen_values = true)]
    pub buffer: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub truncation_tol: Option<f64>,
    /// Seed grid spacing of the point finder.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_step: Option<f64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bins on [0, 4].
    #[arg(long)]
    pub bins: Option<usize>,
    /// Draws per kernel check.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Parent directory of run directories (default: $GEFCRIT_OUTPUT_DIR).
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_flags_then_file_then_defaults() {
        let dir = std::env::temp_dir().join(format!("gefcrit-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "region_radius = 3.0\nrealizations = 11\nkind = \"max\"\n").unwrap();
        let o = Overrides {
            config: Some(path),
            realizations: Some(5),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Command::Simulate, &o).unwrap();
        assert_eq!(cfg.region_radius, 3.0);
        assert_eq!(cfg.realizations, 5);
        assert_eq!(cfg.kind, "max");
        assert_eq!(cfg.grid_step, 0.25);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn invalid_fields_are_named() {
        let o = Overrides {
            radius: Some(-1.0),
            ..Overrides::default()
        };
        let err = RunConfig::resolve(Command::Simulate, &o).unwrap_err();
        assert!(err.to_string().contains("region_radius"), "{err}");
        let o = Overrides {
            kind: Some("minima".into()),
            ..Overrides::default()
        };
        let err = RunConfig::resolve(Command::Simulate, &o).unwrap_err();
        assert!(err.to_string().contains("`kind`"), "{err}");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::defaults(Command::Basins);
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn hash_ignores_plumbing_fields() {
        let a = RunConfig::defaults(Command::Simulate);
        let mut b = a.clone();
        b.threads = 4;
        b.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash("1"), b.hash("1"));
        b.master_seed += 1;
        assert_ne!(a.hash("1"), b.hash("1"));
        assert_ne!(a.hash("1"), a.hash("2"));
    }
}
