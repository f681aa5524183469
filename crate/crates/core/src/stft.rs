//! Pointwise short-time Fourier and Bargmann transforms of sampled signals.
//!
//! `V_g f(x, ξ) = ∫ f(t) \overline{g(t − x)} e^{−2πiξt} dt` is evaluated by the
//! trapezoidal rule on the signal's uniform grid; for smooth, rapidly decaying
//! integrands this converges spectrally. The shifted window is read off the
//! grid by 8-point local Lagrange interpolation, whose weights depend only on
//! the fractional part of `x / step`.
//!
//! Time-frequency points are tied to the complex plane by
//! `(x, ξ) = (Re z̄/√π, Im z̄/√π)`, see [`tf_point`]. With `g = h_0`,
//! `V_g W(tf_point(z)) = e^{i Re z Im z} e^{−|z|²/2} F(z)` where
//! `W = Σ a_k h_k` and `F = Σ a_k z^k/√k!`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gef::CoefficientDraw;
use crate::special::HermiteFunctions;

/// Default time grid.
pub const DEFAULT_T_MAX: f64 = 8.0;
pub const DEFAULT_STEP: f64 = 1.0 / 128.0;

/// Window samples below this fraction of the peak count as outside the support.
const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Tolerance on the unit-norm precondition for windows.
const NORM_TOL: f64 = 1e-10;

/// Half-width of the Lagrange stencil (8 points).
const STENCIL_HALF: i64 = 4;

/// Largest `|z|` accepted by [`bargmann`].
pub const BARGMANN_MAX_ABS: f64 = 6.0;

/// A signal sampled on `t_min, t_min + step, …, t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<Complex64>,
    t_min: f64,
    t_max: f64,
    step: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<Complex64>, t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(t_max > t_min) {
            return Err(Error::InvalidArgument(format!(
                "grid [{t_min}, {t_max}] with step {step}"
            )));
        }
        let expected = ((t_max - t_min) / step).round() as usize + 1;
        if samples.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {expected} points",
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            t_min,
            t_max,
            step,
        })
    }

    /// Samples `f` on `[t_min, t_max]` with the given step.
    pub fn from_fn<F: FnMut(f64) -> Complex64>(t_min: f64, t_max: f64, step: f64, mut f: F) -> Result<Self> {
        let n = ((t_max - t_min) / step).round() as usize + 1;
        let samples = (0..n).map(|j| f(t_min + j as f64 * step)).collect();
        Self::new(samples, t_min, t_max, step)
    }

    /// Samples `f` on the default grid `[−8, 8]`, step `1/128`.
    pub fn on_default_grid<F: FnMut(f64) -> Complex64>(f: F) -> Self {
        Self::from_fn(-DEFAULT_T_MAX, DEFAULT_T_MAX, DEFAULT_STEP, f).expect("default grid is valid")
    }

    /// Hermite function `h_k` on the default grid.
    pub fn hermite(k: usize) -> Result<Self> {
        let h = HermiteFunctions::with_max_order(k.max(crate::special::R_MAX_HERMITE));
        h.eval(k, 0.0)?;
        Ok(Self::on_default_grid(|t| {
            Complex64::new(h.eval(k, t).expect("order checked"), 0.0)
        }))
    }

    /// Truncated white noise `W_N(t) = Σ_{k≤N} a_k h_k(t)` on the default grid.
    pub fn white_noise(draw: &CoefficientDraw) -> Self {
        let n = draw.truncation_order();
        let h = HermiteFunctions::with_max_order(n);
        let a = draw.coefficients();
        Self::on_default_grid(|t| {
            let hs = h.eval_all(n, t).expect("order within cap");
            hs.iter().zip(a).map(|(&hk, &ak)| ak * hk).sum()
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn time(&self, j: usize) -> f64 {
        self.t_min + j as f64 * self.step
    }

    fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.samples.len() {
            0.5 * self.step
        } else {
            self.step
        }
    }

    /// `‖f‖₂` by the trapezoidal rule.
    pub fn l2_norm(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(j, s)| self.trapezoid_weight(j) * s.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `αf + βg` on the shared grid.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        self.check_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        Ok(Self {
            samples,
            ..*self
        })
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        let tol = 1e-12 * self.step;
        if self.samples.len() != other.samples.len()
            || (self.t_min - other.t_min).abs() > tol
            || (self.step - other.step).abs() > tol
        {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Indices of the first and last sample above the support threshold.
    fn support(&self) -> Option<(usize, usize)> {
        let peak = self.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return None;
        }
        let thr = SUPPORT_THRESHOLD * peak;
        let lo = self.samples.iter().position(|s| s.norm() > thr)?;
        let hi = self.samples.iter().rposition(|s| s.norm() > thr)?;
        Some((lo, hi))
    }
}

impl std::ops::Add for &SampledSignal {
    type Output = Result<SampledSignal>;

    fn add(self, rhs: Self) -> Self::Output {
        let one = Complex64::new(1.0, 0.0);
        self.combine(one, rhs, one)
    }
}

/// Value of one STFT evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftValue {
    pub value: Complex64,
    /// Set when part of the shifted window's support fell off the grid.
    pub truncated: bool,
}

/// Time-frequency point `(x, ξ) = (Re z̄/√π, Im z̄/√π)` for `z`.
pub fn tf_point(z: Complex64) -> (f64, f64) {
    let s = PI.sqrt();
    (z.re / s, -z.im / s)
}

/// Lagrange weights for evaluating at fractional offset `phi ∈ [0, 1)` to the
/// right of node 0 from nodes `−3..=4`.
fn lagrange_weights(phi: f64) -> [f64; 8] {
    let nodes: [f64; 8] = std::array::from_fn(|i| i as f64 - (STENCIL_HALF - 1) as f64);
    std::array::from_fn(|i| {
        nodes
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != i)
            .map(|(_, &xm)| (phi - xm) / (nodes[i] - xm))
            .product()
    })
}

/// `V_g f(x, ξ)`.
///
/// `g` must share `f`'s grid and have unit quadrature norm within `1e−10`.
pub fn stft(f: &SampledSignal, g: &SampledSignal, x: f64, xi: f64) -> Result<StftValue> {
    f.check_grid(g)?;
    let norm = g.l2_norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::WindowNotNormalized { norm });
    }
    Ok(stft_unchecked(f, g, x, xi))
}

/// [`stft`] without the grid and norm preconditions; callers that evaluate
/// many points check them once.
fn stft_unchecked(f: &SampledSignal, g: &SampledSignal, x: f64, xi: f64) -> StftValue {
    let h = f.step;
    let n = f.samples.len() as i64;
    // g(t_j − x) = g at fractional index j − s.
    let s = x / h;
    let shift = s.ceil();
    // j − s = (j − shift) + phi with phi ∈ [0, 1).
    let phi = shift - s;
    let base = shift as i64;
    let exact = phi == 0.0;
    let weights = lagrange_weights(phi);

    let truncated = match g.support() {
        None => false,
        Some((lo, hi)) => {
            let lo_t = g.time(lo) + x;
            let hi_t = g.time(hi) + x;
            lo_t < f.t_min - 1e-12 || hi_t > f.t_max + 1e-12
        }
    };

    let window_at = |m: i64| -> Complex64 {
        if (0..n).contains(&m) {
            g.samples[m as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };

    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..f.samples.len() {
        let fj = f.samples[j];
        if fj.re == 0.0 && fj.im == 0.0 {
            continue;
        }
        let m0 = j as i64 - base;
        let gval = if exact {
            window_at(m0)
        } else {
            (0..8)
                .map(|i| window_at(m0 + i as i64 - (STENCIL_HALF - 1)) * weights[i])
                .sum()
        };
        let t = f.time(j);
        let phase = Complex64::from_polar(1.0, -2.0 * PI * xi * t);
        acc += f.trapezoid_weight(j) * fj * gval.conj() * phase;
    }
    StftValue {
        value: acc,
        truncated,
    }
}

/// Bargmann transform `Bf(z) = 2^{1/4} ∫ f(t) e^{2πtz − πt² − (π/2)z²} dt`.
///
/// For `z = x + iξ`, `V_{h_0} f(x, −ξ) = e^{iπxξ} e^{−π|z|²/2} Bf(z)`.
/// The integrand grows like `e^{π Im(z)²/2}` before cancelling, so accuracy
/// degrades for large imaginary parts; `|z|` is capped at 6.
pub fn bargmann(f: &SampledSignal, z: Complex64) -> Result<Complex64> {
    if z.norm() > BARGMANN_MAX_ABS {
        return Err(Error::OutOfRange(format!("|z| = {} > {BARGMANN_MAX_ABS}", z.norm())));
    }
    let shift = -0.5 * PI * z * z;
    let acc: Complex64 = f
        .samples
        .iter()
        .enumerate()
        .map(|(j, &fj)| {
            let t = f.time(j);
            let e = (2.0 * PI * t * z - PI * t * t + shift).exp();
            f.trapezoid_weight(j) * fj * e
        })
        .sum();
    Ok(2f64.powf(0.25) * acc)
}

/// Bargmann transform recovered from the STFT with window `h_0`.
pub fn bargmann_via_stft(f: &SampledSignal, z: Complex64) -> Result<StftValue> {
    let g = SampledSignal::from_fn(f.t_min, f.t_max, f.step, |t| {
        Complex64::new(2f64.powf(0.25) * (-PI * t * t).exp(), 0.0)
    })?;
    let v = stft(f, &g, z.re, -z.im)?;
    let factor = Complex64::from_polar((0.5 * PI * z.norm_sqr()).exp(), -PI * z.re * z.im);
    Ok(StftValue {
        value: v.value * factor,
        truncated: v.truncated,
    })
}

/// Outcome of [`spectrogram_identity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramCheck {
    /// Max over evaluated points of `| |V|² − |e^{−|z|²/2}F|² | / (1 + |e^{−|z|²/2}F|²)`.
    pub max_error: f64,
    pub evaluated: usize,
    /// Grid indices excluded because the shifted window left the time grid.
    pub flagged: Vec<usize>,
}

/// Compares the spectrogram of truncated white noise built from `draw` with
/// the weighted GEF of the same draw at every grid point.
pub fn spectrogram_identity_check(draw: &CoefficientDraw, grid: &[Complex64]) -> Result<SpectrogramCheck> {
    let noise = SampledSignal::white_noise(draw);
    let window = SampledSignal::hermite(0)?;
    noise.check_grid(&window)?;
    let mut max_error: f64 = 0.0;
    let mut flagged = Vec::new();
    let mut evaluated = 0;
    for (i, &z) in grid.iter().enumerate() {
        let (x, xi) = tf_point(z);
        let v = stft_unchecked(&noise, &window, x, xi);
        if v.truncated || !v.value.norm().is_finite() {
            flagged.push(i);
            continue;
        }
        let lhs = v.value.norm_sqr();
        let rhs = (crate::gauss_weight(z) * draw.value(z)).norm_sqr();
        max_error = max_error.max((lhs - rhs).abs() / (1.0 + rhs));
        evaluated += 1;
    }
    Ok(SpectrogramCheck {
        max_error,
        evaluated,
        flagged,
    })
}

/// `V_{h_r} h_k` at the time-frequency images of `points`, for `k = 0..=n`.
///
/// Row `i` holds the values at `points[i]`; `V_{h_r} W` for any draw of order
/// `≤ n` is then the linear combination with its coefficients.
pub fn hermite_stft_basis(n: usize, window_order: usize, points: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
    let window = SampledSignal::hermite(window_order)?;
    let basis: Vec<SampledSignal> = (0..=n).map(SampledSignal::hermite).collect::<Result<_>>()?;
    Ok(points
        .iter()
        .map(|&z| {
            let (x, xi) = tf_point(z);
            basis
                .iter()
                .map(|hk| stft_unchecked(hk, &window, x, xi).value)
                .collect()
        })
        .collect())
}
