use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gef::{eval_bientire, eval_raised, sample_coefficients, truncation_order, DEFAULT_MAX_RAISING};
use crate::special::{kernel_eval, KernelId};
use crate::stft::hermite_stft_basis;

use super::BIENTIRE_SEED_OFFSET;

/// Empirical against theoretical covariance at one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub z: Complex64,
    pub w: Complex64,
    /// Weighted `E[G(z) conj G(w)]` estimate.
    pub empirical: Complex64,
    /// Weighted kernel value.
    pub theoretical: Complex64,
    pub std_error: f64,
}

impl PairCheck {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.theoretical).norm()
    }

    pub fn z_score(&self) -> f64 {
        self.deviation() / self.std_error
    }
}

/// Outcome of [`empirical_kernel_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub kernel: KernelId,
    pub draws: usize,
    pub pairs: Vec<PairCheck>,
    /// Worst absolute deviation and the standard error at that pair.
    pub max_deviation: f64,
    pub std_error_at_max: f64,
    pub max_z_score: f64,
}

/// Radius past the farthest test point used to size the truncation.
const KERNEL_CHECK_BUFFER: f64 = 2.0;

/// Compares Monte-Carlo covariances of the field carrying `kernel` with the
/// kernel itself, both weighted by `e^{−(|z|²+|w|²)/2}`.
///
/// Fields: `landau(r)` uses `(∇')^r F`; `bi_entire` uses `F^{(0)} + F₁^{(1)}`;
/// `weyl_heisenberg_hermite(r)` uses the STFT of truncated white noise with
/// window `h_r` at the time-frequency image of each point.
pub fn empirical_kernel_check(
    kernel: KernelId,
    pairs: &[(Complex64, Complex64)],
    draws: usize,
    seed: u64,
) -> Result<KernelCheck> {
    if draws < 2 || pairs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{draws} draws over {} pairs",
            pairs.len()
        )));
    }
    let reach = pairs
        .iter()
        .map(|(z, w)| z.norm().max(w.norm()))
        .fold(0.0, f64::max);
    let n = truncation_order(reach + KERNEL_CHECK_BUFFER, 1e-12);
    let points: Vec<Complex64> = pairs.iter().flat_map(|&(z, w)| [z, w]).collect();

    // Weighted field values at every point for one draw.
    let basis = match kernel {
        KernelId::WeylHeisenbergHermite(r) => Some(hermite_stft_basis(n, r, &points)?),
        KernelId::Landau(r) if r > DEFAULT_MAX_RAISING => {
            return Err(Error::UnsupportedOrder {
                order: r,
                max: DEFAULT_MAX_RAISING,
            })
        }
        _ => None,
    };
    let field_values = |i: u64| -> Result<Vec<Complex64>> {
        let draw = sample_coefficients(n, seed, i);
        match kernel {
            KernelId::Landau(r) => points
                .iter()
                .map(|&z| Ok(eval_raised(&draw, z, r)? * crate::gauss_weight(z)))
                .collect(),
            KernelId::BiEntire => {
                let second = sample_coefficients(n, seed.wrapping_add(BIENTIRE_SEED_OFFSET), i);
                points
                    .iter()
                    .map(|&z| Ok(eval_bientire(&draw, &second, z)? * crate::gauss_weight(z)))
                    .collect()
            }
            KernelId::WeylHeisenbergHermite(_) => {
                let rows = basis.as_ref().expect("basis built above");
                Ok(rows
                    .iter()
                    .map(|row| row.iter().zip(draw.coefficients()).map(|(b, a)| a * b).sum())
                    .collect())
            }
        }
    };
    let samples: Vec<Vec<Complex64>> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let v = field_values(i)?;
            Ok(v.chunks(2).map(|p| p[0] * p[1].conj()).collect())
        })
        .collect::<Result<_>>()?;

    let nf = draws as f64;
    let mut checks = Vec::with_capacity(pairs.len());
    for (k, &(z, w)) in pairs.iter().enumerate() {
        let mean: Complex64 = samples.iter().map(|s| s[k]).sum::<Complex64>() / nf;
        let var: f64 = samples.iter().map(|s| (s[k] - mean).norm_sqr()).sum::<f64>() / (nf - 1.0);
        let theoretical = match kernel {
            KernelId::WeylHeisenbergHermite(_) => kernel_eval(kernel, z, w),
            _ => kernel_eval(kernel, z, w) * crate::gauss_weight(z) * crate::gauss_weight(w),
        };
        checks.push(PairCheck {
            z,
            w,
            empirical: mean,
            theoretical,
            std_error: (var / nf).sqrt(),
        });
    }
    let worst = checks
        .iter()
        .max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
        .copied()
        .expect("at least one pair");
    let max_z_score = checks.iter().map(|c| c.z_score()).fold(0.0, f64::max);
    Ok(KernelCheck {
        kernel,
        draws,
        pairs: checks,
        max_deviation: worst.deviation(),
        std_error_at_max: worst.std_error,
        max_z_score,
    })
}
