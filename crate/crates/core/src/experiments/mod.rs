//! Monte-Carlo harness: ensembles of independent realizations, intensity
//! estimates, ordinate histograms, empirical kernel checks, radial profiles
//! and gradient-flow basin statistics.
//!
//! Realizations are simulated in parallel and collected in index order, so
//! every aggregate is independent of the thread count.

mod basins;
mod histogram;
mod kernel_check;
mod profile;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gef::{sample_coefficients, truncation_order, CoefficientDraw};
use crate::points::{
    argument_principle_count, argument_principle_count_derivative, find_bientire_zeros_with,
    find_critical_points_with, find_holomorphic_critical_with, find_raised_zeros_with,
    find_zeros_with, FinderConfig, FinderDiagnostics, PointClass, PointRecord, PointSet,
};

pub use basins::{basin_analysis, basin_ensemble, BasinConfig, BasinEnsemble, BasinReport};
pub use histogram::{ordinate_histogram, DensityHistogram};
pub use kernel_check::{empirical_kernel_check, KernelCheck, PairCheck};
pub use profile::{holomorphic_profile, AnnulusEstimate};

/// Offset applied to the master seed for the second draw of the bi-entire
/// field, so the two coefficient streams are independent.
pub const BIENTIRE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest fraction of realizations that may be excluded from a run.
pub const MAX_EXCLUSION_FRACTION: f64 = 0.02;

/// Largest fraction of failed candidate cells tolerated in a realization.
pub const MAX_CELL_FAILURE_FRACTION: f64 = 1e-3;

/// Point processes whose intensity can be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointProcess {
    Zeros,
    Critical,
    Max,
    Saddle,
    HoloCritical,
    HermiteZeros(usize),
    BientireZeros,
}

impl PointProcess {
    /// The field whose zeros carry this process.
    pub fn family(self) -> FieldFamily {
        match self {
            PointProcess::Zeros => FieldFamily::Analytic,
            PointProcess::Critical | PointProcess::Max | PointProcess::Saddle => FieldFamily::Chern,
            PointProcess::HoloCritical => FieldFamily::Derivative,
            PointProcess::HermiteZeros(r) => FieldFamily::Raised(r),
            PointProcess::BientireZeros => FieldFamily::BiEntire,
        }
    }

    /// Closed-form intensity per `ν`-unit where one is known.
    ///
    /// Holomorphic critical points have a radially varying intensity, so no
    /// single target applies; the bi-entire field has none either.
    pub fn target(self) -> Option<f64> {
        match self {
            PointProcess::Zeros => Some(1.0),
            PointProcess::Critical => Some(5.0 / 3.0),
            PointProcess::Max => Some(1.0 / 3.0),
            PointProcess::Saddle => Some(4.0 / 3.0),
            PointProcess::HermiteZeros(r) => Some(crate::kac_rice::hermite_window_zero_intensity(r)),
            PointProcess::HoloCritical | PointProcess::BientireZeros => None,
        }
    }

    fn accepts(self, p: &PointRecord) -> bool {
        match self {
            PointProcess::Max => p.class == PointClass::LocalMax,
            PointProcess::Saddle => p.class == PointClass::Saddle,
            _ => true,
        }
    }
}

impl fmt::Display for PointProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointProcess::Zeros => f.write_str("zeros"),
            PointProcess::Critical => f.write_str("critical"),
            PointProcess::Max => f.write_str("max"),
            PointProcess::Saddle => f.write_str("saddle"),
            PointProcess::HoloCritical => f.write_str("holo_critical"),
            PointProcess::HermiteZeros(r) => write!(f, "hermite_r_zeros({r})"),
            PointProcess::BientireZeros => f.write_str("bientire_zeros"),
        }
    }
}

impl FromStr for PointProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let simple = match s {
            "zeros" => Some(PointProcess::Zeros),
            "critical" | "crit" => Some(PointProcess::Critical),
            "max" => Some(PointProcess::Max),
            "saddle" | "sadd" => Some(PointProcess::Saddle),
            "holo_critical" => Some(PointProcess::HoloCritical),
            "bientire_zeros" => Some(PointProcess::BientireZeros),
            _ => None,
        };
        if let Some(p) = simple {
            return Ok(p);
        }
        for prefix in ["hermite_r_zeros(", "hermite_zeros("] {
            if let Some(rest) = s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')) {
                let r = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad order in `{s}`")))?;
                return Ok(PointProcess::HermiteZeros(r));
            }
        }
        Err(Error::InvalidArgument(format!("unknown point process `{s}`")))
    }
}

/// Field whose zero set is simulated per realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFamily {
    Analytic,
    Chern,
    Derivative,
    Raised(usize),
    BiEntire,
}

/// Parameters of a Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub region_radius: f64,
    pub buffer: f64,
    pub truncation_tol: f64,
    pub grid_step: f64,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            region_radius: 5.0,
            buffer: 2.0,
            truncation_tol: 1e-12,
            grid_step: 0.25,
            realizations: 200,
            seed: 7,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("region_radius", self.region_radius),
            ("buffer", self.buffer),
            ("grid_step", self.grid_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation_tol must lie in (0, 1), got {}",
                self.truncation_tol
            )));
        }
        if self.realizations < 2 {
            return Err(Error::InvalidArgument(format!(
                "realizations must be at least 2, got {}",
                self.realizations
            )));
        }
        Ok(())
    }

    /// Truncation order sized for the searched disk `R + buffer`.
    pub fn truncation_order(&self) -> usize {
        truncation_order(self.region_radius + self.buffer, self.truncation_tol)
    }

    pub fn finder(&self) -> FinderConfig {
        FinderConfig {
            grid_step: self.grid_step,
            buffer: self.buffer,
            ..FinderConfig::default()
        }
    }

    /// `ν`-area of the reporting disk.
    pub fn area_nu(&self) -> f64 {
        self.region_radius * self.region_radius
    }

    /// The draw for realization `index`.
    pub fn draw(&self, index: u64) -> CoefficientDraw {
        sample_coefficients(self.truncation_order(), self.seed, index)
    }

    /// The second, independent draw used by the bi-entire field.
    pub fn second_draw(&self, index: u64) -> CoefficientDraw {
        sample_coefficients(
            self.truncation_order(),
            self.seed.wrapping_add(BIENTIRE_SEED_OFFSET),
            index,
        )
    }
}

/// Why a realization was left out of the aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    OracleFailure(String),
    OracleMismatch { found: usize, oracle: i64 },
    FinderFailures { failed_cells: usize, candidate_cells: usize },
}

/// One simulated realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub index: u64,
    pub points: Vec<PointRecord>,
    pub diagnostics: FinderDiagnostics,
    pub exclusion: Option<Exclusion>,
}

/// Compares the finder's count with the argument-principle oracle.
/// `recount` gives the finder's count inside a (possibly nudged) radius.
fn oracle_check<F>(oracle: Result<crate::points::ArgumentCount>, recount: F) -> Option<Exclusion>
where
    F: Fn(f64) -> usize,
{
    match oracle {
        Err(e) => Some(Exclusion::OracleFailure(e.to_string())),
        Ok(ac) => {
            let found = recount(ac.radius);
            if found as i64 == ac.count {
                None
            } else {
                Some(Exclusion::OracleMismatch {
                    found,
                    oracle: ac.count,
                })
            }
        }
    }
}

/// Simulates realization `index` of `family`.
pub fn simulate_realization(family: FieldFamily, cfg: &ExperimentConfig, index: u64) -> Result<Realization> {
    let draw = cfg.draw(index);
    let finder = cfg.finder();
    let radius = cfg.region_radius;
    let (set, mut exclusion): (PointSet, Option<Exclusion>) = match family {
        FieldFamily::Analytic => {
            let set = find_zeros_with(&draw, radius, &finder);
            let ex = oracle_check(argument_principle_count(&draw, radius), |r| {
                if r == radius {
                    set.points.len()
                } else {
                    find_zeros_with(&draw, r, &finder).points.len()
                }
            });
            (set, ex)
        }
        FieldFamily::Chern => (find_critical_points_with(&draw, radius, &finder), None),
        FieldFamily::Derivative => {
            let set = find_holomorphic_critical_with(&draw, radius, &finder);
            let ex = oracle_check(argument_principle_count_derivative(&draw, radius), |r| {
                if r == radius {
                    set.points.len()
                } else {
                    find_holomorphic_critical_with(&draw, r, &finder).points.len()
                }
            });
            (set, ex)
        }
        FieldFamily::Raised(r) => (find_raised_zeros_with(&draw, r, radius, &finder)?, None),
        FieldFamily::BiEntire => {
            let second = cfg.second_draw(index);
            (find_bientire_zeros_with(&draw, &second, radius, &finder)?, None)
        }
    };
    let d = set.diagnostics;
    if exclusion.is_none() && d.failure_fraction() > MAX_CELL_FAILURE_FRACTION {
        exclusion = Some(Exclusion::FinderFailures {
            failed_cells: d.failed_cells,
            candidate_cells: d.candidate_cells,
        });
    }
    Ok(Realization {
        index,
        points: set.points,
        diagnostics: d,
        exclusion,
    })
}

/// All realizations of one field family under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub family: FieldFamily,
    pub config: ExperimentConfig,
    pub realizations: Vec<Realization>,
}

/// Simulates `cfg.realizations` independent realizations in parallel.
pub fn run_ensemble(family: FieldFamily, cfg: &ExperimentConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let realizations = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| simulate_realization(family, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        family,
        config: *cfg,
        realizations,
    })
}

/// Monte-Carlo intensity per `ν`-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityEstimate {
    pub kind: PointProcess,
    pub count_mean: f64,
    pub area_nu: f64,
    pub intensity: f64,
    pub std_error: f64,
    pub realizations: usize,
    pub excluded: usize,
    pub region_radius: f64,
}

impl IntensityEstimate {
    /// Intensity per unit Lebesgue area.
    pub fn intensity_lebesgue(&self) -> f64 {
        self.intensity / std::f64::consts::PI
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.intensity - target) / self.std_error
    }
}

/// Sample mean and standard error of the mean.
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl Ensemble {
    pub fn excluded(&self) -> usize {
        self.realizations.iter().filter(|r| r.exclusion.is_some()).count()
    }

    /// Realizations that enter the aggregates; fails when too many were
    /// excluded.
    pub fn accepted(&self) -> Result<Vec<&Realization>> {
        let excluded = self.excluded();
        let total = self.realizations.len();
        if excluded as f64 > MAX_EXCLUSION_FRACTION * total as f64 {
            return Err(Error::TooManyExclusions { excluded, total });
        }
        Ok(self
            .realizations
            .iter()
            .filter(|r| r.exclusion.is_none())
            .collect())
    }

    /// Intensity of `kind`, which must belong to this ensemble's family.
    pub fn intensity(&self, kind: PointProcess) -> Result<IntensityEstimate> {
        if kind.family() != self.family {
            return Err(Error::InvalidArgument(format!(
                "{kind} is not carried by the simulated field"
            )));
        }
        let accepted = self.accepted()?;
        let area = self.config.area_nu();
        let counts: Vec<f64> = accepted
            .iter()
            .map(|r| r.points.iter().filter(|p| kind.accepts(p)).count() as f64)
            .collect();
        let per_area: Vec<f64> = counts.iter().map(|c| c / area).collect();
        let (intensity, std_error) = mean_and_se(&per_area);
        Ok(IntensityEstimate {
            kind,
            count_mean: counts.iter().sum::<f64>() / counts.len() as f64,
            area_nu: area,
            intensity,
            std_error,
            realizations: accepted.len(),
            excluded: self.excluded(),
            region_radius: self.config.region_radius,
        })
    }

    /// Summed finder diagnostics.
    pub fn diagnostics(&self) -> FinderDiagnostics {
        let mut d = FinderDiagnostics::default();
        for r in &self.realizations {
            d.merge(&r.diagnostics);
        }
        d
    }
}

/// Runs the ensemble for `kind` and returns its intensity.
pub fn estimate_intensity(kind: PointProcess, cfg: &ExperimentConfig) -> Result<IntensityEstimate> {
    run_ensemble(kind.family(), cfg)?.intensity(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn process_names_round_trip() {
        for p in [
            PointProcess::Zeros,
            PointProcess::Critical,
            PointProcess::Max,
            PointProcess::Saddle,
            PointProcess::HoloCritical,
            PointProcess::HermiteZeros(2),
            PointProcess::BientireZeros,
        ] {
            assert_eq!(p.to_string().parse::<PointProcess>().unwrap(), p);
        }
        assert!("nonsense".parse::<PointProcess>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.realizations = 1;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            grid_step: -1.0,
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidArgument(m)) if m.contains("grid_step")));
    }

    #[test]
    fn small_ensemble_is_deterministic_and_additive() {
        let cfg = ExperimentConfig {
            region_radius: 3.0,
            realizations: 6,
            seed: 3,
            ..ExperimentConfig::default()
        };
        let a = run_ensemble(FieldFamily::Chern, &cfg).unwrap();
        let b = run_ensemble(FieldFamily::Chern, &cfg).unwrap();
        assert_eq!(a, b);
        let crit = a.intensity(PointProcess::Critical).unwrap();
        let max = a.intensity(PointProcess::Max).unwrap();
        let sadd = a.intensity(PointProcess::Saddle).unwrap();
        assert!((crit.count_mean - max.count_mean - sadd.count_mean).abs() < 1e-12);
        for r in &a.realizations {
            let m = r.points.iter().filter(|p| p.class == PointClass::LocalMax).count();
            let s = r.points.iter().filter(|p| p.class == PointClass::Saddle).count();
            assert_eq!(m + s, r.points.len());
        }
        assert!(a.intensity(PointProcess::Zeros).is_err());
    }

    #[test]
    fn mean_and_se_matches_hand_computation() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
