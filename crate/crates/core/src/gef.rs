//! Truncated Gaussian entire functions and the fields derived from them.
//!
//! A [`CoefficientDraw`] holds `a_0..a_N`, i.i.d. standard complex normals,
//! and every field in the crate is evaluated from it:
//!
//! * `F(z) = Σ a_k z^k / √k!`
//! * `F₁ = ∇'F = ∂_z F − z̄ F` (zeros = nonzero critical points of `|F|² e^{-|z|²}`)
//! * `F_r = (∇')^r F` (Landau level `r`)
//! * `F^{(0)} + F₁^{(1)}` from two independent draws (bi-entire field)

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CoefficientStream;

/// Default cap on `r` in [`eval_raised`].
pub const DEFAULT_MAX_RAISING: usize = 4;

/// Identifies a sampled draw; coefficients are regenerable from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DrawKey {
    pub seed: u64,
    pub realization_index: u64,
}

/// One realization of the truncated coefficient sequence `a_0..a_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDraw {
    coefficients: Vec<Complex64>,
    /// `a_k / √k!`, the Taylor coefficients of `F`.
    taylor: Vec<Complex64>,
    key: Option<DrawKey>,
}

/// Samples `a_0..a_n` for realization `realization_index` under `seed`.
pub fn sample_coefficients(n: usize, seed: u64, realization_index: u64) -> CoefficientDraw {
    let mut stream = CoefficientStream::new(seed, realization_index);
    let coefficients = (0..=n).map(|_| stream.next_normal()).collect();
    let mut draw = CoefficientDraw::from_coefficients(coefficients);
    draw.key = Some(DrawKey {
        seed,
        realization_index,
    });
    draw
}

impl CoefficientDraw {
    /// A hand-built draw (tests, crafted fields). Carries no key.
    ///
    /// # Panics
    /// On an empty list or non-finite entries.
    pub fn from_coefficients(coefficients: Vec<Complex64>) -> Self {
        assert!(!coefficients.is_empty(), "a draw needs at least a_0");
        assert!(
            coefficients.iter().all(|c| c.re.is_finite() && c.im.is_finite()),
            "coefficients must be finite"
        );
        let mut inv_sqrt_fact = 1.0;
        let taylor = coefficients
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                if k > 0 {
                    inv_sqrt_fact /= (k as f64).sqrt();
                }
                a * inv_sqrt_fact
            })
            .collect();
        Self {
            coefficients,
            taylor,
            key: None,
        }
    }

    /// Draw whose only nonzero coefficient is `a_k = value`.
    pub fn monomial(k: usize, value: Complex64) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = value;
        Self::from_coefficients(c)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn truncation_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn key(&self) -> Option<DrawKey> {
        self.key
    }

    pub fn seed(&self) -> Option<u64> {
        self.key.map(|k| k.seed)
    }

    pub fn realization_index(&self) -> Option<u64> {
        self.key.map(|k| k.realization_index)
    }

    pub fn is_degenerate(&self) -> bool {
        self.coefficients.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// `[F(z), F'(z), …, F^{(M−1)}(z)]` by Horner's scheme with derivatives.
    pub fn derivatives<const M: usize>(&self, z: Complex64) -> [Complex64; M] {
        let mut acc = [Complex64::new(0.0, 0.0); M];
        for &c in self.taylor.iter().rev() {
            for j in (1..M).rev() {
                acc[j] = acc[j] * z + acc[j - 1];
            }
            acc[0] = acc[0] * z + c;
        }
        let mut fact = 1.0;
        for (j, v) in acc.iter_mut().enumerate().skip(2) {
            fact *= j as f64;
            *v *= fact;
        }
        acc
    }

    /// `F(z)` alone.
    pub fn value(&self, z: Complex64) -> Complex64 {
        self.taylor
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// `F`, its derivative and the Chern derivative `F₁` with its `z`-derivative
/// at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub z: Complex64,
    pub f: Complex64,
    pub df: Complex64,
    /// `∇'F = ∂F − z̄F`.
    pub f1: Complex64,
    /// `∂_z F₁ = F'' − z̄ F'`. The `z̄`-derivative is `∂_z̄ F₁ = −F`.
    pub df1: Complex64,
}

/// Evaluates the jet in one Horner pass.
pub fn eval_jet(draw: &CoefficientDraw, z: Complex64) -> FieldJet {
    let [f, df, d2f] = draw.derivatives::<3>(z);
    let zb = z.conj();
    FieldJet {
        z,
        f,
        df,
        f1: df - zb * f,
        df1: d2f - zb * df,
    }
}

/// Smallest `N` with `Σ_{k>N} R^{2k}/k! · e^{−R²} < tol`.
///
/// That ratio is the share of `Var F(z) = e^{|z|²}` carried by the dropped
/// terms at `|z| = R` (a Poisson(R²) upper tail), so the truncated field's
/// pointwise variance error is below `tol` on the closed disk.
///
/// # Panics
/// Unless `radius > 0` and `0 < tol < 1`.
pub fn truncation_order(radius: f64, tol: f64) -> usize {
    assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
    assert!(tol > 0.0 && tol < 1.0, "tol must lie in (0, 1)");
    let lambda = radius * radius;
    // Walk the Poisson(λ) pmf in log space past the point where the terms
    // are negligible against tol, then accumulate the tail downwards.
    let mut log_terms = Vec::new();
    let mut log_p = -lambda;
    let mut k = 0usize;
    loop {
        log_terms.push(log_p);
        k += 1;
        log_p += lambda.ln() - (k as f64).ln();
        if k as f64 > lambda && log_p < tol.ln() - 40.0 {
            break;
        }
    }
    let mut tail = 0.0;
    let mut n = log_terms.len() - 1;
    // tail(n) = Σ_{k>n} p_k
    while n > 0 {
        let next_tail = tail + log_terms[n].exp();
        if next_tail >= tol {
            return n;
        }
        tail = next_tail;
        n -= 1;
    }
    0
}

/// Representation of `(∇')^r` as `Σ_m P_m(z̄) ∂_z^m`, obtained by iterating
/// `g ↦ ∂_z g − z̄ g` on the coefficient polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct RaisingOperator {
    order: usize,
    /// `coeffs[m][j]`: coefficient of `z̄^j ∂_z^m`.
    coeffs: Vec<Vec<f64>>,
}

impl RaisingOperator {
    pub fn new(order: usize) -> Result<Self> {
        Self::with_cap(order, DEFAULT_MAX_RAISING)
    }

    pub fn with_cap(order: usize, cap: usize) -> Result<Self> {
        if order > cap {
            return Err(Error::UnsupportedOrder { order, max: cap });
        }
        let mut coeffs = vec![vec![1.0]];
        for _ in 0..order {
            let len = coeffs.len() + 1;
            let mut next = vec![vec![0.0; len]; len];
            for (m, poly) in coeffs.iter().enumerate() {
                for (j, &c) in poly.iter().enumerate() {
                    // ∂_z commutes with z̄: raises the derivative order.
                    next[m + 1][j] += c;
                    // −z̄ g: raises the z̄ degree.
                    next[m][j + 1] -= c;
                }
            }
            coeffs = next;
        }
        Ok(Self { order, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `z̄^j ∂^m`.
    pub fn coefficient(&self, m: usize, j: usize) -> f64 {
        self.coeffs
            .get(m)
            .and_then(|p| p.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// Applies the operator given `derivs[m] = F^{(m)}(z)`, `m ≤ order`.
    pub fn apply(&self, z: Complex64, derivs: &[Complex64]) -> Complex64 {
        let zb = z.conj();
        self.coeffs
            .iter()
            .zip(derivs)
            .map(|(poly, &d)| {
                let p = poly
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * zb + c);
                p * d
            })
            .sum()
    }
}

/// Number of derivatives carried for raised fields: orders up to the cap
/// plus one for the `z`-derivative used by Newton refinement.
const RAISED_DERIVS: usize = DEFAULT_MAX_RAISING + 2;

/// `(∇')^r F(z)`.
pub fn eval_raised(draw: &CoefficientDraw, z: Complex64, r: usize) -> Result<Complex64> {
    let op = RaisingOperator::new(r)?;
    let d = draw.derivatives::<RAISED_DERIVS>(z);
    Ok(op.apply(z, &d))
}

/// Value and Wirtinger derivatives of a planar field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Complex64,
    pub dz: Complex64,
    pub dzbar: Complex64,
}

/// Raised field `F_r` with its derivatives. Uses `∂_z F_r = F_{r+1} + z̄F_r`
/// and `∂_z̄ F_r = −r F_{r−1}` (from `[∂_z̄, ∇'] = −1`).
#[derive(Debug, Clone)]
pub struct RaisedField<'a> {
    draw: &'a CoefficientDraw,
    ops: [RaisingOperator; 3],
}

impl<'a> RaisedField<'a> {
    pub fn new(draw: &'a CoefficientDraw, r: usize) -> Result<Self> {
        let below = RaisingOperator::new(r.saturating_sub(1))?;
        let here = RaisingOperator::new(r)?;
        let above = RaisingOperator::with_cap(r + 1, DEFAULT_MAX_RAISING + 1)?;
        Ok(Self {
            draw,
            ops: [below, here, above],
        })
    }

    pub fn order(&self) -> usize {
        self.ops[1].order()
    }

    pub fn sample(&self, z: Complex64) -> FieldSample {
        let d = self.draw.derivatives::<RAISED_DERIVS>(z);
        let r = self.order();
        let value = self.ops[1].apply(z, &d);
        let above = self.ops[2].apply(z, &d);
        let dzbar = if r == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            -(r as f64) * self.ops[0].apply(z, &d)
        };
        FieldSample {
            value,
            dz: above + z.conj() * value,
            dzbar,
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        let d = self.draw.derivatives::<RAISED_DERIVS>(z);
        self.ops[1].apply(z, &d)
    }
}

fn check_independent(draw0: &CoefficientDraw, draw1: &CoefficientDraw) -> Result<()> {
    let same_key = matches!((draw0.key, draw1.key), (Some(a), Some(b)) if a == b);
    if same_key || std::ptr::eq(draw0, draw1) {
        return Err(Error::DependentDraws);
    }
    Ok(())
}

/// `F(z; draw0) + F₁(z; draw1)`.
pub fn eval_bientire(
    draw0: &CoefficientDraw,
    draw1: &CoefficientDraw,
    z: Complex64,
) -> Result<Complex64> {
    check_independent(draw0, draw1)?;
    Ok(draw0.value(z) + eval_jet(draw1, z).f1)
}

/// The bi-entire field as a planar field with derivatives.
#[derive(Debug, Clone, Copy)]
pub struct BiEntireField<'a> {
    draw0: &'a CoefficientDraw,
    draw1: &'a CoefficientDraw,
}

impl<'a> BiEntireField<'a> {
    pub fn new(draw0: &'a CoefficientDraw, draw1: &'a CoefficientDraw) -> Result<Self> {
        check_independent(draw0, draw1)?;
        Ok(Self { draw0, draw1 })
    }

    pub fn sample(&self, z: Complex64) -> FieldSample {
        let [f0, df0] = self.draw0.derivatives::<2>(z);
        let j1 = eval_jet(self.draw1, z);
        FieldSample {
            value: f0 + j1.f1,
            dz: df0 + j1.df1,
            dzbar: -j1.f,
        }
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        self.draw0.value(z) + eval_jet(self.draw1, z).f1
    }
}
