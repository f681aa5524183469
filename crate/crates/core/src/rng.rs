//! Counter-addressed complex Gaussian coefficients.
//!
//! Coefficient `k` of realization `i` under master seed `s` is a pure
//! function of `(s, i, k)`: ChaCha20 keyed by `s`, stream `i`, and the two
//! 64-bit words at block position `2k`. Realizations can therefore be drawn in
//! any order, on any thread, with identical results.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Words of ChaCha output consumed per coefficient (two `u64`).
const WORDS_PER_COEFFICIENT: u128 = 4;

/// Maps a `u64` to a uniform in `(0, 1]`, never zero so `ln` stays finite.
#[inline]
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box–Muller on two raw words: `(g1 + i g2)/√2` with `E|a|² = 1`.
#[inline]
pub fn complex_normal_from_bits(b1: u64, b2: u64) -> Complex64 {
    let u1 = unit_open(b1);
    let u2 = unit_open(b2);
    // |a|² = −ln u1 is Exp(1).
    let radius = (-u1.ln()).sqrt();
    Complex64::from_polar(radius, 2.0 * PI * u2)
}

/// Stream of standard complex normals for one `(seed, realization)` pair.
#[derive(Clone)]
pub struct CoefficientStream {
    rng: ChaCha20Rng,
}

impl CoefficientStream {
    pub fn new(seed: u64, realization_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(realization_index);
        Self { rng }
    }

    /// Positions the stream at coefficient `k`.
    pub fn seek(&mut self, k: usize) {
        self.rng.set_word_pos(WORDS_PER_COEFFICIENT * k as u128);
    }

    pub fn next_normal(&mut self) -> Complex64 {
        let b1 = self.rng.next_u64();
        let b2 = self.rng.next_u64();
        complex_normal_from_bits(b1, b2)
    }
}

/// The single coefficient `a_k` of realization `realization_index`.
pub fn coefficient_at(seed: u64, realization_index: u64, k: usize) -> Complex64 {
    let mut s = CoefficientStream::new(seed, realization_index);
    s.seek(k);
    s.next_normal()
}
