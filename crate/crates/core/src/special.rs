//! Hermite functions, generalized Laguerre polynomials and the Landau-level
//! correlation kernels.
//!
//! Hermite functions use the time-frequency normalization
//! `h_r(t) = 2^{1/4} / √(2^r r!) · H_r(√(2π) t) · e^{-πt²}`, which makes
//! `{h_r}` orthonormal in `L²(ℝ)` with `h_0(t) = 2^{1/4} e^{-πt²}`. They are
//! evaluated with the normalized three-term recurrence
//! `h_{r+1} = √(2/(r+1)) s h_r − √(r/(r+1)) h_{r−1}`, `s = √(2π) t`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on Hermite orders.
pub const R_MAX_HERMITE: usize = 64;

/// Hermite-function evaluator with a configurable order cap.
#[derive(Debug, Clone, Copy)]
pub struct HermiteFunctions {
    pub max_order: usize,
}

impl Default for HermiteFunctions {
    fn default() -> Self {
        Self {
            max_order: R_MAX_HERMITE,
        }
    }
}

impl HermiteFunctions {
    pub fn with_max_order(max_order: usize) -> Self {
        Self { max_order }
    }

    fn check(&self, r: usize) -> Result<()> {
        if r > self.max_order {
            return Err(Error::UnsupportedOrder {
                order: r,
                max: self.max_order,
            });
        }
        Ok(())
    }

    /// `h_r(t)`.
    pub fn eval(&self, r: usize, t: f64) -> Result<f64> {
        self.check(r)?;
        let s = (2.0 * PI).sqrt() * t;
        let mut prev = 0.0;
        let mut cur = 2f64.powf(0.25) * (-PI * t * t).exp();
        for k in 0..r {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * s * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// `[h_0(t), …, h_r(t)]` in one recurrence sweep.
    pub fn eval_all(&self, r: usize, t: f64) -> Result<Vec<f64>> {
        self.check(r)?;
        let s = (2.0 * PI).sqrt() * t;
        let mut out = Vec::with_capacity(r + 1);
        out.push(2f64.powf(0.25) * (-PI * t * t).exp());
        for k in 0..r {
            let kf = k as f64;
            let prev = if k == 0 { 0.0 } else { out[k - 1] };
            let next = (2.0 / (kf + 1.0)).sqrt() * s * out[k] - (kf / (kf + 1.0)).sqrt() * prev;
            out.push(next);
        }
        Ok(out)
    }
}

/// `h_r(t)` with the default order cap.
pub fn hermite_fn(r: usize, t: f64) -> Result<f64> {
    HermiteFunctions::default().eval(r, t)
}

/// Generalized Laguerre polynomial `L_j^α(x)` for integer `α ≥ −j`.
///
/// Uses the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+α−x) L_k − (k+α) L_{k−1}`, which is a polynomial
/// identity and therefore valid for negative integer `α` as well.
pub fn laguerre(j: usize, alpha: i64, x: f64) -> f64 {
    debug_assert!(alpha >= -(j as i64), "alpha must satisfy j + alpha >= 0");
    if j == 0 {
        return 1.0;
    }
    // The three-term recurrence runs in double-double arithmetic: near a
    // root the f64 recurrence loses more digits than the result can spare.
    let a = alpha as f64;
    let mut prev = Dd::from(1.0);
    let mut cur = Dd::two_sum(1.0 + a, -x);
    for k in 1..j {
        let kf = k as f64;
        let lead = Dd::two_sum(2.0 * kf + 1.0 + a, -x);
        let next = lead.mul(cur).sub(prev.scale(kf + a)).div_f64(kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur.hi + cur.lo
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let e = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: e }
    }

    fn quick(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let u = Self::quick(s.hi, s.lo + t.hi);
        Self::quick(u.hi, u.lo + t.lo)
    }

    fn sub(self, o: Self) -> Self {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Self) -> Self {
        let p = Self::two_prod(self.hi, o.hi);
        Self::quick(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn scale(self, c: f64) -> Self {
        let p = Self::two_prod(self.hi, c);
        Self::quick(p.hi, p.lo + self.lo * c)
    }

    fn div_f64(self, c: f64) -> Self {
        let q1 = self.hi / c;
        let r = self.sub(Self::two_prod(q1, c));
        let q2 = r.hi / c;
        let r = r.sub(Self::two_prod(q2, c));
        let q3 = r.hi / c;
        Self::quick(q1, q2).add(Dd::from(q3))
    }
}

/// Correlation kernels of the fields handled by the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    /// `r! L_r(|z−w|²) e^{z w̄}`, the reproducing kernel of the r-th Landau
    /// level and the covariance of `(∇')^r F`.
    Landau(usize),
    /// `L_1^{(1)}(|z−w|²) e^{z w̄}`, the sum of the first two Landau kernels.
    BiEntire,
    /// Covariance of `V_{h_r} W` at `z̄/√π`, `w̄/√π` (translation-invariant,
    /// unit diagonal).
    WeylHeisenbergHermite(usize),
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelId::Landau(r) => write!(f, "landau({r})"),
            KernelId::BiEntire => write!(f, "bi_entire"),
            KernelId::WeylHeisenbergHermite(r) => write!(f, "weyl_heisenberg_hermite({r})"),
        }
    }
}

impl std::str::FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "bi_entire" || s == "bientire" {
            return Ok(KernelId::BiEntire);
        }
        let parse_arg = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?
                .trim()
                .parse()
                .ok()
        };
        if let Some(r) = parse_arg("landau") {
            return Ok(KernelId::Landau(r));
        }
        if let Some(r) = parse_arg("weyl_heisenberg_hermite") {
            return Ok(KernelId::WeylHeisenbergHermite(r));
        }
        Err(Error::InvalidArgument(format!("unknown kernel '{s}'")))
    }
}

/// A complex number stored as `(ln|c|, arg c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_modulus: f64,
    pub phase: f64,
}

impl LogComplex {
    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.log_modulus.exp(), self.phase)
    }
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

impl KernelId {
    /// Polynomial prefactor `P(q)` in `K(z,w) = P(|z−w|²) e^{z w̄}`.
    pub(crate) fn radial_factor(self, q: f64) -> f64 {
        match self {
            KernelId::Landau(r) => factorial(r) * laguerre(r, 0, q),
            KernelId::BiEntire => laguerre(1, 1, q),
            KernelId::WeylHeisenbergHermite(r) => laguerre(r, 0, q),
        }
    }
}

/// `K(z, w)` for the given kernel.
pub fn kernel_eval(id: KernelId, z: Complex64, w: Complex64) -> Complex64 {
    let q = (z - w).norm_sqr();
    let p = id.radial_factor(q);
    match id {
        KernelId::Landau(_) | KernelId::BiEntire => (z * w.conj()).exp() * p,
        KernelId::WeylHeisenbergHermite(_) => {
            let phase = z.re * z.im - w.re * w.im;
            let exponent = z * w.conj() - 0.5 * (z.norm_sqr() + w.norm_sqr());
            (exponent + Complex64::new(0.0, phase)).exp() * p
        }
    }
}

/// Overflow-free variant of [`kernel_eval`]: `ln|K|` and `arg K`.
///
/// Returns `log_modulus = −∞` where the radial factor vanishes.
pub fn kernel_eval_log(id: KernelId, z: Complex64, w: Complex64) -> LogComplex {
    let q = (z - w).norm_sqr();
    let p = id.radial_factor(q);
    let sign_phase = if p < 0.0 { PI } else { 0.0 };
    let zw = z * w.conj();
    let (log_mod, phase) = match id {
        KernelId::Landau(_) | KernelId::BiEntire => (zw.re, zw.im),
        KernelId::WeylHeisenbergHermite(_) => (
            zw.re - 0.5 * (z.norm_sqr() + w.norm_sqr()),
            zw.im + z.re * z.im - w.re * w.im,
        ),
    };
    let phase = (phase + sign_phase).rem_euclid(2.0 * PI);
    LogComplex {
        log_modulus: log_mod + p.abs().ln(),
        phase,
    }
}
