//! Kac–Rice track: jet covariance, Gaussian density of the Hessian scalars,
//! intensity and ordinate-density integrals, and the closed forms they must
//! reproduce.
//!
//! At a critical point `z` of `|F|² e^{−|z|²}` put `v = ∇'∇'F` and
//! `u = ∇''∇'F = −F`, both weighted by `e^{−|z|²/2}`. The real Jacobian of
//! `F₁` has determinant `|v|² − |u|²`, so per `ν`-unit area
//!
//! `N^max = ∫∫_{|u|>|v|} (|u|² − |v|²) p(v, u) dν(v) dν(u)`
//!
//! and `N^sadd` is the same integral over `|u| < |v|`, with
//! `p(v, u) = ½ e^{−|v|²/2 − |u|²}` the density with respect to `dν ⊗ dν`.
//! The ordinate of a critical point is `x = |u|`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig, QuadResult};
use crate::special::{kernel_eval, KernelId};

/// Upper radial limit for the Kac–Rice integrals.
pub const X_MAX: f64 = 12.0;

/// Agreement required between the closed-form and finite-difference
/// covariance paths.
pub const COVARIANCE_FD_TOL: f64 = 1e-6;

/// Critical-point class as used by the density formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CritClass {
    Max,
    Sadd,
    Crit,
}

impl CritClass {
    pub const ALL: [CritClass; 3] = [CritClass::Max, CritClass::Sadd, CritClass::Crit];

    /// Closed-form intensity per `ν`-unit.
    pub fn target_intensity(self) -> f64 {
        match self {
            CritClass::Max => 1.0 / 3.0,
            CritClass::Sadd => 4.0 / 3.0,
            CritClass::Crit => 5.0 / 3.0,
        }
    }
}

impl fmt::Display for CritClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CritClass::Max => "max",
            CritClass::Sadd => "sadd",
            CritClass::Crit => "crit",
        })
    }
}

impl FromStr for CritClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(CritClass::Max),
            "sadd" | "saddle" => Ok(CritClass::Sadd),
            "crit" | "critical" => Ok(CritClass::Crit),
            other => Err(Error::InvalidArgument(format!("unknown class `{other}`"))),
        }
    }
}

/// Covariance of the jet `(∇'G, ∇'∇'G, ∇''∇'G)` of a field `G` with the
/// given kernel, at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetCovariance {
    pub matrix: Matrix3<Complex64>,
    /// Whether the `e^{−|z|²}` factor has been applied.
    pub normalized: bool,
}

impl JetCovariance {
    pub fn inverse(&self) -> Option<Matrix3<Complex64>> {
        self.matrix.try_inverse()
    }

    /// Largest `|Λ_ij − conj(Λ_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.matrix;
        (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Matrix3<Complex64>) -> f64 {
        (self.matrix - other).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Polynomial in `(z, z̄, w, w̄)`: exponent tuple to coefficient.
type Poly = BTreeMap<[u32; 4], f64>;

const Z: usize = 0;
const ZB: usize = 1;
const W: usize = 2;
const WB: usize = 3;

fn poly_add(acc: &mut Poly, e: [u32; 4], c: f64) {
    if c == 0.0 {
        return;
    }
    let entry = acc.entry(e).or_insert(0.0);
    *entry += c;
    if *entry == 0.0 {
        acc.remove(&e);
    }
}

fn poly_diff(p: &Poly, var: usize) -> Poly {
    let mut out = Poly::new();
    for (&e, &c) in p {
        if e[var] > 0 {
            let mut f = e;
            f[var] -= 1;
            poly_add(&mut out, f, c * e[var] as f64);
        }
    }
    out
}

fn poly_mul_var(p: &Poly, var: usize, c: f64) -> Poly {
    let mut out = Poly::new();
    for (&e, &k) in p {
        let mut f = e;
        f[var] += 1;
        poly_add(&mut out, f, c * k);
    }
    out
}

fn poly_sum(a: Poly, b: Poly) -> Poly {
    let mut out = a;
    for (e, c) in b {
        poly_add(&mut out, e, c);
    }
    out
}

/// `∂_z (p e^{zw̄}) = (∂_z p + w̄ p) e^{zw̄}`; the exponential is implicit.
fn d_z(p: &Poly) -> Poly {
    poly_sum(poly_diff(p, Z), poly_mul_var(p, WB, 1.0))
}

fn d_zbar(p: &Poly) -> Poly {
    poly_diff(p, ZB)
}

fn d_w(p: &Poly) -> Poly {
    poly_diff(p, W)
}

fn d_wbar(p: &Poly) -> Poly {
    poly_sum(poly_diff(p, WB), poly_mul_var(p, Z, 1.0))
}

/// `∇' = ∂_z − z̄` in the first slot.
fn raise_z(p: &Poly) -> Poly {
    poly_sum(d_z(p), poly_mul_var(p, ZB, -1.0))
}

/// Conjugate of `∇'` acting in the second slot: `∂_w̄ − w`.
fn raise_w(p: &Poly) -> Poly {
    poly_sum(d_wbar(p), poly_mul_var(p, W, -1.0))
}

fn jet_z(p: &Poly, slot: usize) -> Poly {
    let r = raise_z(p);
    match slot {
        0 => r,
        1 => raise_z(&r),
        _ => d_zbar(&r),
    }
}

fn jet_w(p: &Poly, slot: usize) -> Poly {
    let r = raise_w(p);
    match slot {
        0 => r,
        1 => raise_w(&r),
        _ => d_w(&r),
    }
}

fn poly_eval(p: &Poly, z: Complex64) -> Complex64 {
    let vars = [z, z.conj(), z, z.conj()];
    p.iter()
        .map(|(e, &c)| {
            let mut t = Complex64::new(c, 0.0);
            for (v, &k) in vars.iter().zip(e) {
                t *= v.powu(k);
            }
            t
        })
        .sum()
}

/// Polynomial prefactor `P` with `K = P · e^{zw̄}`.
fn kernel_polynomial(kernel: KernelId) -> Result<Poly> {
    // q = |z − w|² = z z̄ − z w̄ − w z̄ + w w̄
    let mut q = Poly::new();
    poly_add(&mut q, [1, 1, 0, 0], 1.0);
    poly_add(&mut q, [1, 0, 0, 1], -1.0);
    poly_add(&mut q, [0, 1, 1, 0], -1.0);
    poly_add(&mut q, [0, 0, 1, 1], 1.0);
    let poly_of_q = |coeffs: &[f64]| -> Poly {
        let mut out = Poly::new();
        let mut qk = Poly::new();
        poly_add(&mut qk, [0; 4], 1.0);
        for &c in coeffs {
            for (&e, &v) in &qk {
                poly_add(&mut out, e, c * v);
            }
            let mut next = Poly::new();
            for (&e1, &v1) in &qk {
                for (&e2, &v2) in &q {
                    poly_add(
                        &mut next,
                        [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3]],
                        v1 * v2,
                    );
                }
            }
            qk = next;
        }
        out
    };
    match kernel {
        KernelId::Landau(r) => {
            // r! L_r(q) = Σ_i r! C(r, i) (−q)^i / i!
            let mut coeffs = Vec::with_capacity(r + 1);
            let mut binom = 1.0;
            let mut fact_ratio = (1..=r).map(|k| k as f64).product::<f64>();
            for i in 0..=r {
                if i > 0 {
                    binom = binom * (r - i + 1) as f64 / i as f64;
                    fact_ratio /= i as f64;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                coeffs.push(sign * binom * fact_ratio);
            }
            Ok(poly_of_q(&coeffs))
        }
        KernelId::BiEntire => Ok(poly_of_q(&[2.0, -1.0])),
        other => Err(Error::UnsupportedKernel(other.to_string())),
    }
}

/// Closed-form jet covariance by symbolic differentiation, normalized by
/// `e^{−|z|²}`.
pub fn covariance_closed_form(kernel: KernelId, z: Complex64) -> Result<JetCovariance> {
    let p = kernel_polynomial(kernel)?;
    let mut m = Matrix3::zeros();
    for a in 0..3 {
        let pa = jet_z(&p, a);
        for b in 0..3 {
            // The e^{zw̄} factor equals e^{|z|²} on the diagonal and is
            // cancelled by the normalization.
            m[(a, b)] = poly_eval(&jet_w(&pa, b), z);
        }
    }
    Ok(JetCovariance {
        matrix: m,
        normalized: true,
    })
}

/// Central 7-point weights (sixth order) for derivatives of order 0, 1, 2.
const FD_WEIGHTS: [[f64; 7]; 3] = [
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
    [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
];

const FD_STEP: f64 = 0.03;

/// `(∂_x, ∂_y)`-monomials of `∂^p ∂̄^q` with `∂ = ½(∂_x − i∂_y)`,
/// `∂̄ = ½(∂_x + i∂_y)`, as `coeffs[a][b]` for `∂_x^a ∂_y^b`.
fn wirtinger_expansion(p: usize, q: usize) -> [[Complex64; 3]; 3] {
    let mut poly = [[Complex64::new(0.0, 0.0); 3]; 3];
    poly[0][0] = Complex64::new(1.0, 0.0);
    let factors = std::iter::repeat_n(-1.0, p).chain(std::iter::repeat_n(1.0, q));
    for sign in factors {
        let mut next = [[Complex64::new(0.0, 0.0); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let c = poly[a][b];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                if a + 1 < 3 {
                    next[a + 1][b] += 0.5 * c;
                }
                if b + 1 < 3 {
                    next[a][b + 1] += Complex64::new(0.0, 0.5 * sign) * c;
                }
            }
        }
        poly = next;
    }
    poly
}

/// Jet operator in one slot as `Σ coeff · ∂^p ∂̄^q`, where `∂` is the
/// derivative in that slot's variable and `zb` is `z̄` (first slot) or `w`
/// (second slot, conjugated operators).
fn slot_terms(slot: usize, first: bool, zb: Complex64) -> Vec<(Complex64, usize, usize)> {
    let one = Complex64::new(1.0, 0.0);
    // First slot: ∇' = ∂ − z̄, ∇'∇' = ∂² − 2z̄∂ + z̄², ∇''∇' = ∂̄∂ − z̄∂̄ − 1.
    // Second slot, conjugated: ∂̄ − w, ∂̄² − 2w∂̄ + w², ∂∂̄ − w∂ − 1.
    let (hol, anti) = if first { ((1, 0), (0, 1)) } else { ((0, 1), (1, 0)) };
    let pow = |d: (usize, usize), k: usize| (d.0 * k, d.1 * k);
    match slot {
        0 => vec![(one, hol.0, hol.1), (-zb, 0, 0)],
        1 => {
            let h2 = pow(hol, 2);
            vec![(one, h2.0, h2.1), (-2.0 * zb, hol.0, hol.1), (zb * zb, 0, 0)]
        }
        _ => vec![(one, 1, 1), (-zb, anti.0, anti.1), (-one, 0, 0)],
    }
}

/// Jet covariance by finite differences of `kernel_eval`, normalized by
/// `e^{−|z|²}`.
pub fn covariance_finite_difference(kernel: KernelId, z: Complex64) -> Result<JetCovariance> {
    if matches!(kernel, KernelId::WeylHeisenbergHermite(_)) {
        return Err(Error::UnsupportedKernel(kernel.to_string()));
    }
    let h = FD_STEP;
    let scale = (-z.norm_sqr()).exp();
    // Samples K(z + δ₁, z + δ₂) on the 7⁴ stencil, pre-normalized.
    let mut samples = vec![Complex64::new(0.0, 0.0); 7 * 7 * 7 * 7];
    for i in 0..7 {
        for j in 0..7 {
            let zz = z + Complex64::new((i as f64 - 3.0) * h, (j as f64 - 3.0) * h);
            for k in 0..7 {
                for l in 0..7 {
                    let ww = z + Complex64::new((k as f64 - 3.0) * h, (l as f64 - 3.0) * h);
                    samples[((i * 7 + j) * 7 + k) * 7 + l] = kernel_eval(kernel, zz, ww) * scale;
                }
            }
        }
    }
    // Real partials ∂_{x_z}^a ∂_{y_z}^b ∂_{x_w}^c ∂_{y_w}^d with a+b ≤ 2, c+d ≤ 2.
    let partial = |a: usize, b: usize, c: usize, d: usize| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..7 {
            let wi = FD_WEIGHTS[a][i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..7 {
                let wj = wi * FD_WEIGHTS[b][j];
                if wj == 0.0 {
                    continue;
                }
                for k in 0..7 {
                    let wk = wj * FD_WEIGHTS[c][k];
                    if wk == 0.0 {
                        continue;
                    }
                    for l in 0..7 {
                        let wl = wk * FD_WEIGHTS[d][l];
                        if wl != 0.0 {
                            acc += wl * samples[((i * 7 + j) * 7 + k) * 7 + l];
                        }
                    }
                }
            }
        }
        acc / h.powi((a + b + c + d) as i32)
    };
    let wirtinger = |p: usize, q: usize, r: usize, s: usize| -> Complex64 {
        let ez = wirtinger_expansion(p, q);
        let ew = wirtinger_expansion(r, s);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..3 {
            for b in 0..3 - a {
                if ez[a][b] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..3 {
                    for d in 0..3 - c {
                        if ew[c][d] != Complex64::new(0.0, 0.0) {
                            acc += ez[a][b] * ew[c][d] * partial(a, b, c, d);
                        }
                    }
                }
            }
        }
        acc
    };
    let mut m = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (cz, p, q) in slot_terms(a, true, z.conj()) {
                for (cw, r, s) in slot_terms(b, false, z) {
                    acc += cz * cw * wirtinger(p, q, r, s);
                }
            }
            m[(a, b)] = acc;
        }
    }
    Ok(JetCovariance {
        matrix: m,
        normalized: true,
    })
}

/// Jet covariance from the closed-form path, cross-checked against finite
/// differences.
pub fn build_covariance(kernel: KernelId, z: Complex64) -> Result<JetCovariance> {
    let closed = covariance_closed_form(kernel, z)?;
    let fd = covariance_finite_difference(kernel, z)?;
    let deviation = closed.max_abs_diff(&fd.matrix);
    if deviation > COVARIANCE_FD_TOL {
        return Err(Error::CovarianceInconsistent { deviation });
    }
    Ok(closed)
}

/// `p(v, u) = ½ e^{−|v|²/2 − |u|²}`, density with respect to `dν(v) dν(u)`.
pub fn density_p(v: Complex64, u: Complex64) -> f64 {
    0.5 * (-0.5 * v.norm_sqr() - u.norm_sqr()).exp()
}

/// `dν(v)` integrated over angles: `2r dr`.
fn nu_radial(r: f64) -> f64 {
    2.0 * r
}

// The radial integrands are smooth and unimodal; one starting panel each.
fn inner_cfg() -> QuadConfig {
    QuadConfig {
        initial_panels: 1,
        ..QuadConfig::with_tol(1e-15, 1e-13)
    }
}

fn outer_cfg() -> QuadConfig {
    QuadConfig {
        initial_panels: 1,
        ..QuadConfig::with_tol(1e-12, 1e-12)
    }
}

/// Nested radial integral `∫∫ g(r_v, r_u) p 2r_v dr_v 2r_u dr_u` over
/// `[0, X_MAX]²`, restricted by `region`.
fn radial_integral<G>(g: G, region: Option<CritClass>) -> Result<QuadResult>
where
    G: Fn(f64, f64) -> f64,
{
    let mut inner_err = 0.0f64;
    let mut failure = None;
    let outer = integrate(
        |ru| {
            let (lo, hi) = match region {
                Some(CritClass::Max) => (0.0, ru),
                Some(CritClass::Sadd) => (ru, X_MAX),
                _ => (0.0, X_MAX),
            };
            let inner = integrate(
                |rv| {
                    let p = density_p(Complex64::new(rv, 0.0), Complex64::new(ru, 0.0));
                    g(rv, ru) * p * nu_radial(rv)
                },
                lo,
                hi,
                inner_cfg(),
            );
            match inner {
                Ok(r) => {
                    inner_err = inner_err.max(r.abs_error);
                    r.value * nu_radial(ru)
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        X_MAX,
        outer_cfg(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult {
        abs_error: outer.abs_error + X_MAX * X_MAX * inner_err,
        ..outer
    })
}

/// `∫∫ p dν dν` computed, not assumed. Multiply by `π²` for the Lebesgue
/// normalization.
pub fn density_normalization() -> Result<QuadResult> {
    radial_integral(|_, _| 1.0, None)
}

/// Kac–Rice intensity per `ν`-unit by quadrature in polar coordinates on `ℂ²`.
pub fn intensity_quadrature(which: CritClass) -> Result<QuadResult> {
    let jac = |rv: f64, ru: f64| (ru * ru - rv * rv).abs();
    match which {
        CritClass::Max | CritClass::Sadd => radial_integral(jac, Some(which)),
        CritClass::Crit => {
            let a = radial_integral(jac, Some(CritClass::Max))?;
            let b = radial_integral(jac, Some(CritClass::Sadd))?;
            Ok(QuadResult {
                value: a.value + b.value,
                abs_error: a.abs_error + b.abs_error,
                evaluations: a.evaluations + b.evaluations,
            })
        }
    }
}

/// Closed-form ordinate densities.
pub fn ordinate_density(which: CritClass, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let x2 = x * x;
    let max = 2.0 * x * (x2 - 2.0 + 2.0 * (-0.5 * x2).exp()) * (-x2).exp();
    let sadd = 4.0 * x * (-1.5 * x2).exp();
    match which {
        CritClass::Max => max,
        CritClass::Sadd => sadd,
        CritClass::Crit => max + sadd,
    }
}

/// `D(x) = 2x e^{−x²} ∫_0^∞ |2t − x²| e^{−t} dt` split at `t = x²/2`:
/// `(t < x²/2, t > x²/2)` are the (max, saddle) contributions.
pub fn ordinate_density_quadrature(x: f64) -> Result<(f64, f64)> {
    if x < 0.0 {
        return Err(Error::InvalidArgument(format!("ordinate {x} < 0")));
    }
    let x2 = x * x;
    let pre = 2.0 * x * (-x2).exp();
    let cfg = QuadConfig::with_tol(1e-15, 1e-13);
    let split = 0.5 * x2;
    let below = integrate(|t| (x2 - 2.0 * t) * (-t).exp(), 0.0, split, cfg)?;
    let above = integrate(|t| (2.0 * t - x2) * (-t).exp(), split, split + 60.0, cfg)?;
    Ok((pre * below.value, pre * above.value))
}

/// `∫_lo^hi D(x) dx` by quadrature of the closed form.
pub fn ordinate_mass(which: CritClass, lo: f64, hi: f64) -> Result<f64> {
    Ok(integrate(|x| ordinate_density(which, x), lo, hi, QuadConfig::with_tol(1e-14, 1e-12))?.value)
}

/// `1 + (1 + ρ²)^{−2}`, radial intensity of critical points of `|F|`.
pub fn holo_critical_profile(rho: f64) -> f64 {
    1.0 + (1.0 + rho * rho).powi(-2)
}

/// Average of [`holo_critical_profile`] over the annulus `ρ₁ ≤ |z| < ρ₂`
/// with respect to area.
pub fn holo_critical_annulus(rho1: f64, rho2: f64) -> f64 {
    let (a, b) = (rho1 * rho1, rho2 * rho2);
    1.0 + (1.0 / (1.0 + a) - 1.0 / (1.0 + b)) / (b - a)
}

/// `r + 1/2 + 1/(4r + 2)`.
pub fn hermite_window_zero_intensity(r: usize) -> f64 {
    let r = r as f64;
    r + 0.5 + 1.0 / (4.0 * r + 2.0)
}

/// `(2 N^sadd / N^zer, 2 N^sadd / N^max)` from the quadrature intensities.
pub fn basin_ratios() -> Result<(f64, f64)> {
    let sadd = intensity_quadrature(CritClass::Sadd)?.value;
    let max = intensity_quadrature(CritClass::Max)?.value;
    Ok((2.0 * sadd / 1.0, 2.0 * sadd / max))
}
