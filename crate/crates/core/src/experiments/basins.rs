use std::collections::BTreeSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_and_se, ExperimentConfig};
use crate::error::{Error, Result};
use crate::gef::{eval_jet, sample_coefficients, truncation_order, CoefficientDraw};
use crate::points::{find_critical_points_with, find_zeros_with, FinderConfig, PointClass, PointRecord};

/// Gradient-flow parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinConfig {
    /// Spacing of the labelled node grid.
    pub grid_step: f64,
    /// Largest arc-length step of the flow.
    pub max_step: f64,
    pub capture_radius: f64,
    pub step_budget: usize,
    /// Zeros and maxima closer than this to the disk edge are not averaged,
    /// since their basins are cut by the boundary.
    pub margin: f64,
    /// Flows leaving `|z| > R + buffer` are unresolved.
    pub buffer: f64,
    /// Largest unresolved fraction of an accepted report.
    pub max_unresolved: f64,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.1,
            max_step: 0.1,
            capture_radius: 1e-3,
            step_budget: 500,
            margin: 1.5,
            buffer: 2.0,
            max_unresolved: 0.05,
        }
    }
}

/// Basin statistics of one draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    /// Mean number of neighbouring basins per zero.
    pub zero_neighbor_mean: f64,
    /// Mean number of distinct basins meeting near a local maximum.
    pub max_meeting_mean: f64,
    /// Mean number of distinct zeros joined to a zero by the two descending
    /// curves of a saddle. Unlike the grid count, this ignores basins that
    /// only touch near a local maximum.
    pub saddle_neighbor_mean: f64,
    pub grid_step: f64,
    pub unresolved_fraction: f64,
    pub zeros_used: usize,
    pub maxima_used: usize,
    pub nodes: usize,
}

/// Probe points on a small circle around each saddle.
const SADDLE_PROBES: usize = 16;
const SADDLE_PROBE_RADIUS: f64 = 0.02;

/// Unit descent direction `−∇U/|∇U|` of `U = log|F| − |z|²/2`.
/// Since `∇U = conj(F₁/F)`, this is `−conj(F₁/F)` normalized.
fn descent(draw: &CoefficientDraw, z: Complex64) -> Option<(Complex64, f64)> {
    let j = eval_jet(draw, z);
    if j.f.norm() == 0.0 {
        return None;
    }
    let g = (j.f1 / j.f).conj();
    let n = g.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    // |F/F'| estimates the distance to the nearest zero.
    let dist = if j.df.norm() > 0.0 {
        (j.f / j.df).norm()
    } else {
        f64::INFINITY
    };
    Some((-g / n, dist))
}

fn nearest(zeros: &[Complex64], z: Complex64) -> Option<(usize, f64)> {
    zeros
        .iter()
        .enumerate()
        .map(|(k, a)| (k, (a - z).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Follows the descent flow from `z0`; returns the index of the capturing
/// zero, or `None` when the flow escapes, stalls or exhausts its budget.
fn flow_label(draw: &CoefficientDraw, z0: Complex64, zeros: &[Complex64], escape: f64, cfg: &BasinConfig) -> Option<usize> {
    let mut z = z0;
    let mut steps = 0;
    while steps < cfg.step_budget {
        let (k, d) = nearest(zeros, z)?;
        if d <= cfg.capture_radius {
            return Some(k);
        }
        let (k1, dist) = descent(draw, z)?;
        let mut h = cfg.max_step.min(0.5 * dist.min(d)).max(0.25 * cfg.capture_radius);
        loop {
            steps += 1;
            let (k2, _) = descent(draw, z + 0.5 * h * k1)?;
            let (k3, _) = descent(draw, z + 0.5 * h * k2)?;
            let (k4, _) = descent(draw, z + h * k3)?;
            if (k1 - k4).norm() > 0.2 && h > 1e-6 && steps < cfg.step_budget {
                h *= 0.5;
                continue;
            }
            z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            break;
        }
        if z.norm() > escape {
            return None;
        }
    }
    None
}

/// Gradient-flow basins of the zeros of `F` on a node grid over `|z| ≤ R`.
///
/// `zeros` must contain every zero the flow can reach, i.e. those in
/// `|z| ≤ R + buffer`; `critical` holds the critical points of the Chern
/// field (local maxima and saddles), of which those in `|z| ≤ R` are used.
pub fn basin_analysis(
    draw: &CoefficientDraw,
    zeros: &[PointRecord],
    critical: &[PointRecord],
    region_radius: f64,
    cfg: &BasinConfig,
) -> Result<BasinReport> {
    let h = cfg.grid_step;
    let n = (region_radius / h).floor() as i64;
    let side = (2 * n + 1) as usize;
    let zero_locs: Vec<Complex64> = zeros.iter().map(|p| p.location).collect();
    let escape = region_radius + cfg.buffer;
    let node = |i: i64, j: i64| Complex64::new(i as f64 * h, j as f64 * h);
    let inside = |i: i64, j: i64| node(i, j).norm() <= region_radius;

    // None: outside the disk; Some(None): unresolved; Some(Some(k)): basin k.
    let labels: Vec<Option<Option<usize>>> = (0..side * side)
        .into_par_iter()
        .map(|idx| {
            let i = (idx / side) as i64 - n;
            let j = (idx % side) as i64 - n;
            if !inside(i, j) {
                None
            } else {
                Some(flow_label(draw, node(i, j), &zero_locs, escape, cfg))
            }
        })
        .collect();
    let label = |i: i64, j: i64| -> Option<Option<usize>> {
        if i < -n || i > n || j < -n || j > n {
            return None;
        }
        labels[((i + n) as usize) * side + (j + n) as usize]
    };

    let total = labels.iter().filter(|l| l.is_some()).count();
    let unresolved = labels.iter().filter(|l| matches!(l, Some(None))).count();
    let unresolved_fraction = if total == 0 { 0.0 } else { unresolved as f64 / total as f64 };
    if unresolved_fraction > cfg.max_unresolved {
        return Err(Error::BasinRejected {
            fraction: unresolved_fraction,
        });
    }

    let mut neighbors = vec![BTreeSet::new(); zeros.len()];
    let mut labelled = BTreeSet::new();
    for i in -n..=n {
        for j in -n..=n {
            let Some(Some(a)) = label(i, j) else { continue };
            labelled.insert(a);
            for (di, dj) in [(1, 0), (0, 1)] {
                if let Some(Some(b)) = label(i + di, j + dj) {
                    if a != b {
                        neighbors[a].insert(b);
                        neighbors[b].insert(a);
                    }
                }
            }
        }
    }
    let interior = region_radius - cfg.margin;
    let mut used: Vec<usize> = labelled
        .iter()
        .copied()
        .filter(|&a| zero_locs[a].norm() <= interior)
        .collect();
    if used.is_empty() {
        used = labelled.iter().copied().collect();
    }
    let zero_neighbor_mean = if used.is_empty() {
        0.0
    } else {
        used.iter().map(|&a| neighbors[a].len() as f64).sum::<f64>() / used.len() as f64
    };

    // Saddle connections: each saddle's descending curves end at two zeros.
    let mut linked = vec![BTreeSet::new(); zeros.len()];
    for s in critical
        .iter()
        .filter(|p| p.class == PointClass::Saddle && p.location.norm() <= region_radius)
    {
        let ends: BTreeSet<usize> = (0..SADDLE_PROBES)
            .filter_map(|k| {
                let angle = std::f64::consts::TAU * k as f64 / SADDLE_PROBES as f64;
                flow_label(draw, s.location + Complex64::from_polar(SADDLE_PROBE_RADIUS, angle), &zero_locs, escape, cfg)
            })
            .collect();
        if let [a, b] = ends.iter().copied().collect::<Vec<_>>()[..] {
            linked[a].insert(b);
            linked[b].insert(a);
        }
    }
    let saddle_neighbor_mean = if used.is_empty() {
        0.0
    } else {
        used.iter().map(|&a| linked[a].len() as f64).sum::<f64>() / used.len() as f64
    };

    let reach = 2.0 * h;
    let span = (reach / h).ceil() as i64;
    let meeting: Vec<f64> = critical
        .iter()
        .filter(|m| m.class == PointClass::LocalMax && m.location.norm() <= interior)
        .map(|m| {
            let ci = (m.location.re / h).round() as i64;
            let cj = (m.location.im / h).round() as i64;
            let mut seen = BTreeSet::new();
            for i in ci - span..=ci + span {
                for j in cj - span..=cj + span {
                    if (node(i, j) - m.location).norm() <= reach {
                        if let Some(Some(a)) = label(i, j) {
                            seen.insert(a);
                        }
                    }
                }
            }
            seen.len() as f64
        })
        .collect();
    let max_meeting_mean = if meeting.is_empty() {
        0.0
    } else {
        meeting.iter().sum::<f64>() / meeting.len() as f64
    };
    Ok(BasinReport {
        zero_neighbor_mean,
        max_meeting_mean,
        saddle_neighbor_mean,
        grid_step: h,
        unresolved_fraction,
        zeros_used: used.len(),
        maxima_used: meeting.len(),
        nodes: total,
    })
}

/// Ensemble of basin reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinEnsemble {
    pub reports: Vec<BasinReport>,
    pub rejected: usize,
    pub zero_neighbor_mean: f64,
    pub zero_neighbor_se: f64,
    pub max_meeting_mean: f64,
    pub max_meeting_se: f64,
    pub saddle_neighbor_mean: f64,
    pub saddle_neighbor_se: f64,
}

/// Runs [`basin_analysis`] on `exp.realizations` draws.
pub fn basin_ensemble(exp: &ExperimentConfig, cfg: &BasinConfig) -> Result<BasinEnsemble> {
    exp.validate()?;
    let radius = exp.region_radius;
    let zero_radius = radius + cfg.buffer;
    let finder = FinderConfig {
        grid_step: exp.grid_step,
        buffer: 1.0,
        ..FinderConfig::default()
    };
    let order = truncation_order(zero_radius + finder.buffer, exp.truncation_tol);
    let outcomes: Vec<Result<BasinReport>> = (0..exp.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let draw = sample_coefficients(order, exp.seed, i);
            let zeros = find_zeros_with(&draw, zero_radius, &finder).points;
            let crit_finder = FinderConfig {
                buffer: exp.buffer,
                ..finder
            };
            let critical = find_critical_points_with(&draw, radius, &crit_finder).points;
            basin_analysis(&draw, &zeros, &critical, radius, cfg)
        })
        .collect();
    let mut reports = Vec::new();
    let mut rejected = 0;
    for o in outcomes {
        match o {
            Ok(r) => reports.push(r),
            Err(Error::BasinRejected { .. }) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    if reports.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} accepted basin reports",
            reports.len()
        )));
    }
    let zn: Vec<f64> = reports.iter().map(|r| r.zero_neighbor_mean).collect();
    let mm: Vec<f64> = reports.iter().map(|r| r.max_meeting_mean).collect();
    let (zero_neighbor_mean, zero_neighbor_se) = mean_and_se(&zn);
    let (max_meeting_mean, max_meeting_se) = mean_and_se(&mm);
    let sn: Vec<f64> = reports.iter().map(|r| r.saddle_neighbor_mean).collect();
    let (saddle_neighbor_mean, saddle_neighbor_se) = mean_and_se(&sn);
    Ok(BasinEnsemble {
        reports,
        rejected,
        zero_neighbor_mean,
        zero_neighbor_se,
        max_meeting_mean,
        max_meeting_se,
        saddle_neighbor_mean,
        saddle_neighbor_se,
    })
}
