//! Machine-readable summary of a run and its text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// One empirical value compared with its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub std_error: Option<f64>,
    pub z_score: Option<f64>,
    /// Human-readable acceptance rule.
    pub tolerance: String,
    pub passed: bool,
    /// Exploratory checks are reported but never fail the run.
    pub fatal: bool,
}

impl Check {
    /// `|value − target| ≤ k·SE`.
    pub fn within_se(name: impl Into<String>, value: f64, target: f64, se: f64, k: f64) -> Self {
        let z = (value - target) / se;
        Self {
            name: name.into(),
            value,
            target: Some(target),
            std_error: Some(se),
            z_score: Some(z),
            tolerance: format!("|z| <= {k}"),
            passed: z.abs() <= k,
            fatal: true,
        }
    }

    /// `|value − target| ≤ tol`.
    pub fn absolute(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: Some(target),
            std_error: None,
            z_score: None,
            tolerance: format!("|value - target| <= {tol:e}"),
            passed: (value - target).abs() <= tol,
            fatal: true,
        }
    }

    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            std_error: None,
            z_score: None,
            tolerance: format!("value <= {bound:e}"),
            passed: value <= bound,
            fatal: true,
        }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            std_error: None,
            z_score: None,
            tolerance: format!("value >= {bound}"),
            passed: value >= bound,
            fatal: true,
        }
    }

    /// `|value/target − 1| ≤ rel`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, se: Option<f64>, rel: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: Some(target),
            std_error: se,
            z_score: se.map(|s| (value - target) / s),
            tolerance: format!("within {}% of target", rel * 100.0),
            passed: (value / target - 1.0).abs() <= rel,
            fatal: true,
        }
    }

    /// A recorded value with no acceptance rule.
    pub fn record(name: impl Into<String>, value: f64, se: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            std_error: se,
            z_score: None,
            tolerance: "recorded".into(),
            passed: true,
            fatal: false,
        }
    }

    pub fn exploratory(mut self) -> Self {
        self.fatal = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Manifest hash of the run that produced this summary.
    pub manifest: String,
    pub command: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Summary {
    pub fn new(manifest: &str, command: &str) -> Self {
        Self {
            manifest: manifest.to_string(),
            command: command.to_string(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// True when every fatal check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.fatal)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (manifest {})", self.command, self.manifest);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
            let status = match (c.passed, c.fatal) {
                (true, _) => "ok",
                (false, true) => "FAIL",
                (false, false) => "miss",
            };
            let _ = writeln!(
                out,
                "  {:<width$}  value {:>12.6}  target {:>10}  se {:>10}  z {:>8}  [{}] {}",
                c.name,
                c.value,
                opt(c.target),
                opt(c.std_error),
                c.z_score.map_or("-".to_string(), |z| format!("{z:.2}")),
                c.tolerance,
                status,
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "  status: {}", if self.passed() { "pass" } else { "FAIL" });
        out
    }
}
