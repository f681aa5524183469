//! Locating, refining and classifying zeros of planar fields.
//!
//! All fields are handled through [`PlanarField`]: a value together with its
//! Wirtinger derivatives `∂_z` and `∂_z̄`. Holomorphic fields have
//! `∂_z̄ = 0`; the Chern derivative `F₁` has `∂_z̄ F₁ = −F`.
//!
//! Candidates come from a square seed grid: a cell is searched when both
//! `Re G` and `Im G` straddle zero over its corners, or when a Newton step
//! from its centre stays inside the cell. Each candidate is refined by planar
//! Newton iteration, then a deterministic sort-and-merge pass removes
//! duplicates. Residuals and thresholds use the weighted value
//! `|G(z)| e^{−|z|²/2}`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_weight;
use crate::gef::{eval_jet, BiEntireField, CoefficientDraw, FieldSample, RaisedField};

/// A field on the plane with its Wirtinger derivatives.
pub trait PlanarField: Sync {
    fn sample(&self, z: Complex64) -> FieldSample;

    fn value(&self, z: Complex64) -> Complex64 {
        self.sample(z).value
    }
}

/// `F` itself.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticField<'a>(pub &'a CoefficientDraw);

/// `F₁ = ∇'F`, whose zeros are the nonzero critical points of `|F|² e^{−|z|²}`.
#[derive(Debug, Clone, Copy)]
pub struct ChernField<'a>(pub &'a CoefficientDraw);

/// `∂F`, whose zeros are the critical points of `|F|`.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeField<'a>(pub &'a CoefficientDraw);

impl PlanarField for AnalyticField<'_> {
    fn sample(&self, z: Complex64) -> FieldSample {
        let [f, df] = self.0.derivatives::<2>(z);
        FieldSample {
            value: f,
            dz: df,
            dzbar: Complex64::new(0.0, 0.0),
        }
    }

    fn value(&self, z: Complex64) -> Complex64 {
        self.0.value(z)
    }
}

impl PlanarField for ChernField<'_> {
    fn sample(&self, z: Complex64) -> FieldSample {
        let j = eval_jet(self.0, z);
        FieldSample {
            value: j.f1,
            dz: j.df1,
            dzbar: -j.f,
        }
    }
}

impl PlanarField for DerivativeField<'_> {
    fn sample(&self, z: Complex64) -> FieldSample {
        let [_, df, d2f] = self.0.derivatives::<3>(z);
        FieldSample {
            value: df,
            dz: d2f,
            dzbar: Complex64::new(0.0, 0.0),
        }
    }
}

impl PlanarField for RaisedField<'_> {
    fn sample(&self, z: Complex64) -> FieldSample {
        RaisedField::sample(self, z)
    }

    fn value(&self, z: Complex64) -> Complex64 {
        RaisedField::value(self, z)
    }
}

impl PlanarField for BiEntireField<'_> {
    fn sample(&self, z: Complex64) -> FieldSample {
        BiEntireField::sample(self, z)
    }

    fn value(&self, z: Complex64) -> Complex64 {
        BiEntireField::value(self, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    /// Zero of `F`.
    ZeroOfF,
    /// Zero of `F₁`.
    Critical,
    /// Zero of `∂F`.
    HolomorphicCritical,
    /// Zero of `(∇')^r F`.
    HermiteZero(usize),
    /// Zero of `F^{(0)} + F₁^{(1)}`.
    BiEntireZero,
}

impl std::fmt::Display for PointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointKind::ZeroOfF => write!(f, "zero_of_f"),
            PointKind::Critical => write!(f, "critical"),
            PointKind::HolomorphicCritical => write!(f, "holo_critical"),
            PointKind::HermiteZero(r) => write!(f, "hermite_zero({r})"),
            PointKind::BiEntireZero => write!(f, "bientire_zero"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    LocalMax,
    Saddle,
    NotApplicable,
}

impl std::fmt::Display for PointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PointClass::LocalMax => "local_max",
            PointClass::Saddle => "saddle",
            PointClass::NotApplicable => "not_applicable",
        };
        f.write_str(s)
    }
}

/// A refined point.
///
/// `u`, `v` and `ordinate` are Gaussian-weighted (`× e^{−|z|²/2}`). For
/// critical points `u = ∇''∇'F = −F` and `v = ∇'∇'F = ∂_z F₁`. For zeros of a
/// field `G`, `u = G` (the residual) and `v = ∂_z G`; for holomorphic
/// critical points `u = F` and `v = ∂²F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub location: Complex64,
    pub kind: PointKind,
    pub class: PointClass,
    /// `|F(z)| e^{−|z|²/2}`.
    pub ordinate: f64,
    pub u: Complex64,
    pub v: Complex64,
    /// Weighted `|G|` at the refined location.
    pub residual: f64,
    pub newton_iters: usize,
}

/// Relative width of the `|u|² = |v|²` band treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Hessian-sign classification of a critical point from its scalars.
pub fn classify_scalars(u: Complex64, v: Complex64) -> PointClass {
    let (a, b) = (u.norm_sqr(), v.norm_sqr());
    if (a - b).abs() <= DEGENERACY_TOL * (a + b) {
        PointClass::NotApplicable
    } else if a > b {
        PointClass::LocalMax
    } else {
        PointClass::Saddle
    }
}

/// Classification of a critical-point record; other kinds are not classified
/// by this rule.
pub fn classify(record: &PointRecord) -> PointClass {
    match record.kind {
        PointKind::Critical => classify_scalars(record.u, record.v),
        PointKind::HolomorphicCritical => PointClass::Saddle,
        _ => PointClass::NotApplicable,
    }
}

/// Seeding and refinement parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinderConfig {
    pub grid_step: f64,
    /// Extra radius searched beyond the reporting radius.
    pub buffer: f64,
    pub merge_radius: f64,
    pub residual_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
}

impl Default for FinderConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.25,
            buffer: 2.0,
            merge_radius: 1e-6,
            residual_tol: 1e-10,
            step_tol: 1e-12,
            max_iters: 50,
        }
    }
}

/// Counters from one search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinderDiagnostics {
    pub candidate_cells: usize,
    pub seeds: usize,
    /// Seeds whose Newton iteration did not converge.
    pub diverged_seeds: usize,
    /// Candidate cells none of whose seeds converged.
    pub failed_cells: usize,
    /// Seeds restarted after hitting a singular Jacobian.
    pub singular_retries: usize,
    /// Seeds finished with minimum-norm Gauss–Newton steps.
    pub singular_fallbacks: usize,
    /// Accepted critical points with `|u| = |v|`.
    pub degenerate: usize,
}

impl FinderDiagnostics {
    pub fn merge(&mut self, other: &Self) {
        self.candidate_cells += other.candidate_cells;
        self.seeds += other.seeds;
        self.diverged_seeds += other.diverged_seeds;
        self.failed_cells += other.failed_cells;
        self.singular_retries += other.singular_retries;
        self.singular_fallbacks += other.singular_fallbacks;
        self.degenerate += other.degenerate;
    }

    /// Failed cells as a fraction of candidate cells.
    pub fn failure_fraction(&self) -> f64 {
        if self.candidate_cells == 0 {
            0.0
        } else {
            self.failed_cells as f64 / self.candidate_cells as f64
        }
    }
}

/// Records plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<PointRecord>,
    pub diagnostics: FinderDiagnostics,
}

/// A converged Newton run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub z: Complex64,
    pub iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NewtonOutcome {
    Converged(Refined),
    Singular(Complex64),
    Diverged,
}

const MAX_HALVINGS: usize = 12;

fn weighted_residual(value: Complex64, z: Complex64) -> f64 {
    value.norm() * gauss_weight(z)
}

/// Planar Newton step solving `G + A δ + B δ̄ = 0`, or `None` when
/// `|A|² ≈ |B|²`.
fn newton_step(s: &FieldSample) -> Option<Complex64> {
    let (a, b) = (s.dz, s.dzbar);
    let det = a.norm_sqr() - b.norm_sqr();
    let scale = a.norm_sqr() + b.norm_sqr();
    if scale == 0.0 || det.abs() <= 1e-14 * scale {
        return None;
    }
    let c = -s.value;
    Some((a.conj() * c - b * c.conj()) / det)
}

/// Minimum-norm Gauss–Newton step from the real Jacobian
/// `[∂_x G, ∂_y G] = [A + B, i(A − B)]`.
fn min_norm_step(s: &FieldSample) -> Option<Complex64> {
    let gx = s.dz + s.dzbar;
    let gy = Complex64::new(0.0, 1.0) * (s.dz - s.dzbar);
    let j = Matrix2::new(gx.re, gy.re, gx.im, gy.im);
    let scale = j.norm();
    if scale == 0.0 {
        return None;
    }
    let pinv = j.pseudo_inverse(1e-10 * scale).ok()?;
    let d = pinv * Vector2::new(-s.value.re, -s.value.im);
    Some(Complex64::new(d[0], d[1]))
}

fn iterate<G: PlanarField + ?Sized>(
    field: &G,
    z0: Complex64,
    cfg: &FinderConfig,
    fallback: bool,
) -> NewtonOutcome {
    let mut z = z0;
    let max_step = cfg.grid_step;
    for iter in 0..cfg.max_iters {
        let s = field.sample(z);
        let res = weighted_residual(s.value, z);
        if !res.is_finite() {
            return NewtonOutcome::Diverged;
        }
        let step = match newton_step(&s) {
            Some(d) => d,
            None if fallback => match min_norm_step(&s) {
                Some(d) => d,
                None if res < cfg.residual_tol => Complex64::new(0.0, 0.0),
                None => return NewtonOutcome::Diverged,
            },
            None if res < cfg.residual_tol => Complex64::new(0.0, 0.0),
            None => return NewtonOutcome::Singular(z),
        };
        let len = step.norm();
        if res < cfg.residual_tol && len < cfg.step_tol {
            return NewtonOutcome::Converged(Refined {
                z,
                iters: iter,
                residual: res,
            });
        }
        let mut trial = if len > max_step { step * (max_step / len) } else { step };
        if res >= cfg.residual_tol {
            // Backtrack until |G| drops; a Newton step that never does is
            // circling a fold of the Jacobian. The Gaussian weight is left
            // out since it can grow faster along the step than |G| falls.
            let norm = s.value.norm();
            let mut halvings = 0;
            while field.value(z + trial).norm() >= norm {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return NewtonOutcome::Diverged;
                }
                trial *= 0.5;
            }
        }
        z += trial;
    }
    // Accept a point that meets the residual bound even if the last step
    // was still above step_tol (rounding floor of large fields).
    let s = field.sample(z);
    let res = weighted_residual(s.value, z);
    if res < cfg.residual_tol {
        NewtonOutcome::Converged(Refined {
            z,
            iters: cfg.max_iters,
            residual: res,
        })
    } else {
        NewtonOutcome::Diverged
    }
}

/// Newton refinement from `z0` with the singular-Jacobian policy: restart
/// once from `z0 + h/4`, then continue with minimum-norm Gauss–Newton steps.
pub fn refine<G: PlanarField + ?Sized>(
    field: &G,
    z0: Complex64,
    cfg: &FinderConfig,
    diag: &mut FinderDiagnostics,
) -> Option<Refined> {
    match iterate(field, z0, cfg, false) {
        NewtonOutcome::Converged(r) => return Some(r),
        NewtonOutcome::Diverged => return None,
        NewtonOutcome::Singular(_) => diag.singular_retries += 1,
    }
    let z1 = z0 + cfg.grid_step / 4.0;
    match iterate(field, z1, cfg, false) {
        NewtonOutcome::Converged(r) => Some(r),
        NewtonOutcome::Diverged => None,
        NewtonOutcome::Singular(z) => {
            diag.singular_fallbacks += 1;
            match iterate(field, z, cfg, true) {
                NewtonOutcome::Converged(r) => Some(r),
                _ => None,
            }
        }
    }
}

/// Sorts by position and merges points closer than `radius`, keeping the one
/// with the smallest residual. Deterministic for any input order.
pub fn dedup(mut points: Vec<Refined>, radius: f64) -> Vec<Refined> {
    points.sort_by(|a, b| {
        a.z.re
            .total_cmp(&b.z.re)
            .then(a.z.im.total_cmp(&b.z.im))
            .then(a.residual.total_cmp(&b.residual))
    });
    let mut kept: Vec<Refined> = Vec::with_capacity(points.len());
    for p in points {
        let mut merged = false;
        for q in kept.iter_mut().rev() {
            if p.z.re - q.z.re > radius {
                break;
            }
            if (p.z - q.z).norm() <= radius {
                if p.residual < q.residual {
                    *q = p;
                }
                merged = true;
                break;
            }
        }
        if !merged {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    kept
}

/// Degree of the planar map `field` on the boundary of the square with lower
/// left corner `lo` and side `h`; `None` when the field vanishes on it.
fn cell_degree<G: PlanarField + ?Sized>(field: &G, lo: Complex64, h: f64) -> Option<i64> {
    const MAX_DEPTH: u32 = 12;
    let corners = [
        lo,
        lo + Complex64::new(h, 0.0),
        lo + Complex64::new(h, h),
        lo + Complex64::new(0.0, h),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        // Stack of (start, end, value at start, value at end, depth).
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let mut stack = vec![(a, b, field.value(a), field.value(b), 0)];
        while let Some((p, q, fp, fq, depth)) = stack.pop() {
            if fp == Complex64::new(0.0, 0.0) || fq == Complex64::new(0.0, 0.0) {
                return None;
            }
            let d = (fq / fp).arg();
            if d.abs() > std::f64::consts::FRAC_PI_3 && depth < MAX_DEPTH {
                let m = 0.5 * (p + q);
                let fm = field.value(m);
                stack.push((m, q, fm, fq, depth + 1));
                stack.push((p, m, fp, fm, depth + 1));
            } else {
                total += d;
            }
        }
    }
    Some((total / std::f64::consts::TAU).round() as i64)
}

/// Finds the zeros of `field` in `|z| ≤ radius`, searching out to
/// `radius + buffer`.
pub fn locate<G: PlanarField + ?Sized>(
    field: &G,
    radius: f64,
    cfg: &FinderConfig,
) -> (Vec<Refined>, FinderDiagnostics) {
    let h = cfg.grid_step;
    let outer = radius + cfg.buffer;
    let n = (outer / h).ceil() as i64;
    let side = (2 * n + 1) as usize;
    let node = |i: i64, j: i64| Complex64::new(i as f64 * h, j as f64 * h);
    let mut values = vec![Complex64::new(0.0, 0.0); side * side];
    for i in -n..=n {
        for j in -n..=n {
            values[((i + n) as usize) * side + (j + n) as usize] = field.value(node(i, j));
        }
    }
    let at = |i: i64, j: i64| values[((i + n) as usize) * side + (j + n) as usize];

    let mut diag = FinderDiagnostics::default();
    let mut found = Vec::new();
    let mut cells = Vec::new();
    let reach = outer + h * std::f64::consts::FRAC_1_SQRT_2;
    for i in -n..n {
        for j in -n..n {
            let centre = node(i, j) + Complex64::new(0.5 * h, 0.5 * h);
            if centre.norm() > reach {
                continue;
            }
            let corners = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            let straddles = |f: fn(&Complex64) -> f64| {
                let lo = corners.iter().map(f).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            let mut candidate = straddles(|c| c.re) && straddles(|c| c.im);
            if !candidate {
                let s = field.sample(centre);
                candidate = match newton_step(&s) {
                    Some(d) => d.norm() <= 0.75 * h,
                    None => false,
                };
            }
            if !candidate {
                continue;
            }
            diag.candidate_cells += 1;
            let q = 0.25 * h;
            let seeds = [
                centre,
                centre + Complex64::new(-q, -q),
                centre + Complex64::new(q, -q),
                centre + Complex64::new(-q, q),
                centre + Complex64::new(q, q),
            ];
            for seed in seeds {
                diag.seeds += 1;
                match refine(field, seed, cfg, &mut diag) {
                    Some(r) => {
                        if r.z.norm() <= outer + h {
                            found.push(r);
                        }
                    }
                    None => diag.diverged_seeds += 1,
                }
            }
            cells.push(node(i, j));
        }
    }

    // A candidate cell fails when the field winds around its boundary but
    // no located point lies in it, even after a denser set of seeds.
    let slack = 1e-9 * h;
    let covered = |lo: Complex64, pts: &[Refined]| {
        pts.iter().any(|p| {
            p.z.re >= lo.re - slack
                && p.z.re <= lo.re + h + slack
                && p.z.im >= lo.im - slack
                && p.z.im <= lo.im + h + slack
        })
    };
    for lo in cells {
        if covered(lo, &found) || cell_degree(field, lo, h) == Some(0) {
            continue;
        }
        let mut extra = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                let seed = lo + Complex64::new((a as f64 + 0.5) * 0.25 * h, (b as f64 + 0.5) * 0.25 * h);
                diag.seeds += 1;
                match refine(field, seed, cfg, &mut diag) {
                    Some(r) => extra.push(r),
                    None => diag.diverged_seeds += 1,
                }
            }
        }
        if !covered(lo, &extra) {
            diag.failed_cells += 1;
        }
        found.extend(extra.into_iter().filter(|r| r.z.norm() <= outer + h));
    }
    let mut points = dedup(found, cfg.merge_radius);
    points.retain(|p| p.z.norm() <= radius);
    (points, diag)
}

fn zero_record(kind: PointKind, field_sample: FieldSample, f: Complex64, r: &Refined) -> PointRecord {
    let w = gauss_weight(r.z);
    PointRecord {
        location: r.z,
        kind,
        class: PointClass::NotApplicable,
        ordinate: f.norm() * w,
        u: field_sample.value * w,
        v: field_sample.dz * w,
        residual: r.residual,
        newton_iters: r.iters,
    }
}

/// Zeros of `F` with explicit configuration.
pub fn find_zeros_with(draw: &CoefficientDraw, radius: f64, cfg: &FinderConfig) -> PointSet {
    let field = AnalyticField(draw);
    let (found, diagnostics) = locate(&field, radius, cfg);
    let points = found
        .iter()
        .map(|r| {
            let s = field.sample(r.z);
            zero_record(PointKind::ZeroOfF, s, s.value, r)
        })
        .collect();
    PointSet {
        points,
        diagnostics,
    }
}

/// Zeros of `F` in `|z| ≤ radius`.
pub fn find_zeros(draw: &CoefficientDraw, radius: f64) -> Vec<PointRecord> {
    find_zeros_with(draw, radius, &FinderConfig::default()).points
}

/// Builds the critical-point record at a refined zero of `F₁`.
pub fn critical_record(draw: &CoefficientDraw, r: &Refined) -> PointRecord {
    let j = eval_jet(draw, r.z);
    let w = gauss_weight(r.z);
    let u = -j.f * w;
    let v = j.df1 * w;
    PointRecord {
        location: r.z,
        kind: PointKind::Critical,
        class: classify_scalars(u, v),
        ordinate: j.f.norm() * w,
        u,
        v,
        residual: r.residual,
        newton_iters: r.iters,
    }
}

/// Zeros of `F₁` with explicit configuration.
pub fn find_critical_points_with(draw: &CoefficientDraw, radius: f64, cfg: &FinderConfig) -> PointSet {
    let (found, mut diagnostics) = locate(&ChernField(draw), radius, cfg);
    let points: Vec<PointRecord> = found.iter().map(|r| critical_record(draw, r)).collect();
    diagnostics.degenerate = points
        .iter()
        .filter(|p| p.class == PointClass::NotApplicable)
        .count();
    PointSet {
        points,
        diagnostics,
    }
}

/// Critical points of `|F|² e^{−|z|²}` away from the zeros of `F`.
pub fn find_critical_points(draw: &CoefficientDraw, radius: f64) -> Vec<PointRecord> {
    find_critical_points_with(draw, radius, &FinderConfig::default()).points
}

/// Zeros of `∂F` with explicit configuration.
pub fn find_holomorphic_critical_with(
    draw: &CoefficientDraw,
    radius: f64,
    cfg: &FinderConfig,
) -> PointSet {
    let field = DerivativeField(draw);
    let (found, diagnostics) = locate(&field, radius, cfg);
    let points = found
        .iter()
        .map(|r| {
            let [f, _, d2f] = draw.derivatives::<3>(r.z);
            let w = gauss_weight(r.z);
            PointRecord {
                location: r.z,
                kind: PointKind::HolomorphicCritical,
                class: PointClass::Saddle,
                ordinate: f.norm() * w,
                u: f * w,
                v: d2f * w,
                residual: r.residual,
                newton_iters: r.iters,
            }
        })
        .collect();
    PointSet {
        points,
        diagnostics,
    }
}

/// Critical points of `|F|`, i.e. zeros of `∂F`; all are saddles of `|F|`.
pub fn find_holomorphic_critical(draw: &CoefficientDraw, radius: f64) -> Vec<PointRecord> {
    find_holomorphic_critical_with(draw, radius, &FinderConfig::default()).points
}

/// Zeros of `(∇')^r F`.
pub fn find_raised_zeros_with(
    draw: &CoefficientDraw,
    r: usize,
    radius: f64,
    cfg: &FinderConfig,
) -> Result<PointSet> {
    let field = RaisedField::new(draw, r)?;
    let (found, diagnostics) = locate(&field, radius, cfg);
    let points = found
        .iter()
        .map(|p| zero_record(PointKind::HermiteZero(r), field.sample(p.z), draw.value(p.z), p))
        .collect();
    Ok(PointSet {
        points,
        diagnostics,
    })
}

/// Zeros of the bi-entire field `F^{(0)} + F₁^{(1)}`.
pub fn find_bientire_zeros_with(
    draw0: &CoefficientDraw,
    draw1: &CoefficientDraw,
    radius: f64,
    cfg: &FinderConfig,
) -> Result<PointSet> {
    let field = BiEntireField::new(draw0, draw1)?;
    let (found, diagnostics) = locate(&field, radius, cfg);
    let points = found
        .iter()
        .map(|p| {
            let s = field.sample(p.z);
            zero_record(PointKind::BiEntireZero, s, s.value, p)
        })
        .collect();
    Ok(PointSet {
        points,
        diagnostics,
    })
}

/// Result of [`argument_principle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgumentCount {
    pub count: i64,
    /// Circle radius actually used (perturbed when a zero was too close).
    pub radius: f64,
    pub nodes: usize,
}

const AP_START_NODES: usize = 256;
const AP_MAX_NODES: usize = 1 << 20;
const AP_NEAR_ZERO: f64 = 1e-4;
const AP_RADIUS_NUDGE: f64 = 1e-3;

/// Number of zeros of a holomorphic `f` inside `|z| < radius`, from
/// `(1/2πi)∮ f'/f dz` by the trapezoidal rule with node doubling.
///
/// `f_and_df` returns `(f(z), f'(z))`.
pub fn argument_principle<F>(f_and_df: F, radius: f64) -> Result<ArgumentCount>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut r = radius;
    for _attempt in 0..8 {
        let mut nodes = AP_START_NODES;
        let mut prev: Option<f64> = None;
        let mut too_close = false;
        while nodes <= AP_MAX_NODES {
            let mut sum = 0.0;
            let mut min_ratio = f64::INFINITY;
            for j in 0..nodes {
                let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / nodes as f64);
                let (f, df) = f_and_df(z);
                let q = df / f;
                min_ratio = min_ratio.min(1.0 / q.norm());
                sum += (z * q).re;
            }
            if min_ratio < AP_NEAR_ZERO {
                too_close = true;
                break;
            }
            let est = sum / nodes as f64;
            if let Some(p) = prev {
                let k = est.round();
                if (est - k).abs() < 1e-3 && (p - k).abs() < 1e-3 {
                    return Ok(ArgumentCount {
                        count: k as i64,
                        radius: r,
                        nodes,
                    });
                }
            }
            prev = Some(est);
            nodes *= 2;
        }
        if !too_close {
            return Err(Error::OracleFailure { nodes: AP_MAX_NODES });
        }
        r += AP_RADIUS_NUDGE;
    }
    Err(Error::OracleFailure { nodes: AP_MAX_NODES })
}

/// Zero count of `F` inside the circle of the given radius.
pub fn argument_principle_count(draw: &CoefficientDraw, radius: f64) -> Result<ArgumentCount> {
    if draw.is_degenerate() {
        return Err(Error::DegenerateDraw);
    }
    argument_principle(
        |z| {
            let [f, df] = draw.derivatives::<2>(z);
            (f, df)
        },
        radius,
    )
}

/// Zero count of `∂F` inside the circle.
pub fn argument_principle_count_derivative(
    draw: &CoefficientDraw,
    radius: f64,
) -> Result<ArgumentCount> {
    argument_principle(
        |z| {
            let [_, df, d2f] = draw.derivatives::<3>(z);
            (df, d2f)
        },
        radius,
    )
}

/// Five-point finite-difference Laplacian of `log|F(z)| − |z|²/2`.
pub fn log_modulus_laplacian(draw: &CoefficientDraw, z: Complex64, h: f64) -> f64 {
    let u = |p: Complex64| draw.value(p).norm().ln() - 0.5 * p.norm_sqr();
    let (e, n) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    (u(z + e) + u(z - e) + u(z + n) + u(z - n) - 4.0 * u(z)) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gef::{sample_coefficients, truncation_order};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_draw(radius: f64, seed: u64, idx: u64) -> CoefficientDraw {
        sample_coefficients(truncation_order(radius + 2.0, 1e-12), seed, idx)
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_scalars(c(-1.0, 0.0), c(0.0, 0.0)), PointClass::LocalMax);
        assert_eq!(classify_scalars(c(0.1, 0.0), c(1.0, 0.0)), PointClass::Saddle);
        assert_eq!(classify_scalars(c(0.0, 1.0), c(1.0, 0.0)), PointClass::NotApplicable);
    }

    #[test]
    fn constant_field_has_no_zeros() {
        let d = CoefficientDraw::monomial(0, c(1.0, 0.0));
        assert!(find_zeros(&d, 3.0).is_empty());
        assert_eq!(argument_principle_count(&d, 3.0).unwrap().count, 0);
    }

    #[test]
    fn linear_field_single_zero() {
        let d = CoefficientDraw::from_coefficients(vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        let z = find_zeros(&d, 3.0);
        assert_eq!(z.len(), 1);
        assert!((z[0].location - 1.0).norm() < 1e-10);
        let id = CoefficientDraw::monomial(1, c(1.0, 0.0));
        assert_eq!(argument_principle_count(&id, 2.0).unwrap().count, 1);
    }

    #[test]
    fn constant_field_critical_point_at_origin() {
        let d = CoefficientDraw::monomial(0, c(1.0, 0.0));
        let pts = find_critical_points(&d, 3.0);
        assert_eq!(pts.len(), 1);
        let p = pts[0];
        assert!(p.location.norm() < 1e-10);
        assert!((p.u - c(-1.0, 0.0)).norm() < 1e-10);
        assert!(p.v.norm() < 1e-10);
        assert_eq!(p.class, PointClass::LocalMax);
    }

    #[test]
    fn degenerate_ring() {
        let d = CoefficientDraw::monomial(1, c(1.0, 0.0));
        let set = find_critical_points_with(&d, 2.0, &FinderConfig::default());
        let ring: Vec<_> = set
            .points
            .iter()
            .filter(|p| (p.location.norm() - 1.0).abs() < 1e-8)
            .collect();
        assert!(ring.len() >= 8, "{} ring points", ring.len());
        for p in &ring {
            assert_eq!(p.class, PointClass::NotApplicable);
            assert!((p.u.norm() - p.v.norm()).abs() < 1e-8);
        }
        assert!(set.diagnostics.degenerate >= 8);
    }

    #[test]
    fn holomorphic_critical_of_square() {
        // a_2 = 1 gives F = z²/√2, F' = √2 z.
        let d = CoefficientDraw::monomial(2, c(1.0, 0.0));
        let pts = find_holomorphic_critical(&d, 2.0);
        assert_eq!(pts.len(), 1);
        assert!(pts[0].location.norm() < 1e-10);
        assert_eq!(pts[0].class, PointClass::Saddle);
    }

    #[test]
    fn newton_solves_antiholomorphic_linear_map() {
        // G = z̄ − (1 + i): ∂_z G = 0, ∂_z̄ G = 1.
        struct Conj;
        impl PlanarField for Conj {
            fn sample(&self, z: Complex64) -> FieldSample {
                FieldSample {
                    value: z.conj() - c(1.0, 1.0),
                    dz: c(0.0, 0.0),
                    dzbar: c(1.0, 0.0),
                }
            }
        }
        let mut diag = FinderDiagnostics::default();
        let r = refine(&Conj, c(0.9, -0.8), &FinderConfig::default(), &mut diag).unwrap();
        assert!((r.z - c(1.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn dedup_is_order_independent() {
        let mk = |re: f64, im: f64, res: f64| Refined {
            z: c(re, im),
            iters: 0,
            residual: res,
        };
        let pts = vec![
            mk(1.0, 1.0, 1e-12),
            mk(1.0 + 5e-7, 1.0, 1e-13),
            mk(-2.0, 0.5, 1e-12),
            mk(1.0, 1.0 + 2e-6, 1e-12),
        ];
        let mut rev = pts.clone();
        rev.reverse();
        let a = dedup(pts, 1e-6);
        let b = dedup(rev, 1e-6);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().any(|p| p.residual == 1e-13));
    }

    #[test]
    fn argument_principle_nudges_radius() {
        // Zero exactly on the circle |z| = 1.
        let d = CoefficientDraw::from_coefficients(vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        let ac = argument_principle_count(&d, 1.0).unwrap();
        assert!(ac.radius > 1.0);
        assert_eq!(ac.count, 1);
    }

    #[test]
    fn zeros_match_oracle_and_are_simple() {
        for idx in 0..5 {
            let d = random_draw(4.0, 11, idx);
            let set = find_zeros_with(&d, 4.0, &FinderConfig::default());
            let ac = argument_principle_count(&d, 4.0).unwrap();
            let within = if ac.radius == 4.0 {
                set.points.len()
            } else {
                find_zeros(&d, ac.radius).len()
            };
            assert_eq!(within as i64, ac.count, "realization {idx}");
            for p in &set.points {
                assert!(p.residual < 1e-10);
                assert!(p.v.norm() > 1e-6);
            }
        }
    }

    #[test]
    fn critical_points_are_consistent() {
        let d = random_draw(4.0, 12, 0);
        let set = find_critical_points_with(&d, 4.0, &FinderConfig::default());
        assert!(!set.points.is_empty());
        let cfg = FinderConfig::default();
        for p in &set.points {
            assert!(p.residual < 1e-10);
            let j = eval_jet(&d, p.location);
            assert!((p.ordinate - j.f.norm() * gauss_weight(p.location)).abs() < 1e-10);
            assert_eq!(p.class, classify(p));
            let mut diag = FinderDiagnostics::default();
            let again = refine(&ChernField(&d), p.location, &cfg, &mut diag).unwrap();
            assert!((again.z - p.location).norm() < 1e-9);
        }
        assert_eq!(set.diagnostics.degenerate, 0);
    }

    #[test]
    fn superharmonicity_away_from_zeros() {
        let d = random_draw(3.0, 13, 2);
        let zeros = find_zeros(&d, 4.0);
        for i in 0..50 {
            let z = Complex64::from_polar(0.06 * i as f64, 2.4 * i as f64);
            if zeros.iter().any(|p| (p.location - z).norm() < 0.05) {
                continue;
            }
            let lap = log_modulus_laplacian(&d, z, 1e-3);
            assert!((lap + 2.0).abs() < 1e-2, "z={z} lap={lap}");
        }
    }
}
