//! Run directories: staged writes, CSV tables, manifest.
//!
//! A run is written into a hidden staging directory next to its final
//! location and renamed into place only after every file is complete, so a
//! failed run leaves no partial results behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io_err, Result};
use crate::summary::Summary;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TEXT: &str = "summary.txt";
/// Prefix of the first line of every CSV. `points.csv` also repeats the hash
/// in its `run_id` column.
pub const MANIFEST_COMMENT: &str = "# manifest=";
pub const POINTS_FILE: &str = "points.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub hash: String,
    pub config: RunConfig,
    pub wall_time_seconds: f64,
    /// Result files in the run directory, manifest excluded.
    pub files: Vec<String>,
}

/// Full-precision, round-trippable number formatting; empty for `None`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rows of strings under a fixed header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct RunWriter {
    staging: PathBuf,
    target: PathBuf,
    hash: String,
    files: Vec<String>,
    done: bool,
}

impl RunWriter {
    /// Run directory `<output_dir>/<command>-<hash prefix>`.
    pub fn target_dir(cfg: &RunConfig, hash: &str) -> PathBuf {
        cfg.output_dir.join(format!("{}-{}", cfg.command, &hash[..12]))
    }

    pub fn create(cfg: &RunConfig, hash: &str) -> Result<Self> {
        let target = Self::target_dir(cfg, hash);
        fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
        let name = target.file_name().expect("run dir has a name").to_string_lossy();
        let staging = cfg
            .output_dir
            .join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
        }
        fs::create_dir(&staging).map_err(io_err(&staging))?;
        Ok(Self {
            staging,
            target,
            hash: hash.to_string(),
            files: Vec::new(),
            done: false,
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.staging.join(name)
    }

    /// Writes `table` as CSV, preceded by the manifest comment line.
    pub fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.path(name);
        let mut file = fs::File::create(&path).map_err(io_err(&path))?;
        writeln!(file, "{MANIFEST_COMMENT}{}", self.hash).map_err(io_err(&path))?;
        write_rows(file, table)
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(io_err(&path))
    }

    /// Writes an SVG document with the hash in a comment after the root tag.
    pub fn svg(&mut self, name: &str, document: &str) -> Result<()> {
        let (first, rest) = document.split_once('\n').unwrap_or((document, ""));
        let body = format!("{first}\n<!-- manifest={} -->\n{rest}", self.hash);
        self.text(name, &body)
    }

    /// Writes the summary files and the manifest, then moves the run into
    /// place, replacing an earlier run with the same hash.
    pub fn finish(mut self, cfg: &RunConfig, summary: &Summary, wall_time_seconds: f64) -> Result<PathBuf> {
        let json = serde_json::to_string_pretty(summary)?;
        self.text(SUMMARY_JSON, &(json + "\n"))?;
        self.text(SUMMARY_TEXT, &summary.render())?;
        let manifest = Manifest {
            version: crate::VERSION.to_string(),
            hash: self.hash.clone(),
            config: cfg.clone(),
            wall_time_seconds,
            files: self.files.clone(),
        };
        let path = self.staging.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io_err(&path))?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target).map_err(io_err(&self.target))?;
        }
        fs::rename(&self.staging, &self.target).map_err(io_err(&self.target))?;
        self.done = true;
        Ok(self.target.clone())
    }
}

impl Drop for RunWriter {
    fn drop(&mut self) {
        if !self.done {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

fn write_rows(file: fs::File, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_manifest(run_dir: &Path) -> Result<Manifest> {
    let path = run_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}
