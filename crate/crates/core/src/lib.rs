//! Critical points of Gaussian entire functions and white-noise spectrograms.
//!
//! The crate has two independent tracks that are meant to be checked against
//! each other:
//!
//! * a simulation track ([`gef`], [`points`], [`experiments`]) that samples
//!   truncated Gaussian entire functions `F(z) = Σ a_k z^k / √k!`, locates the
//!   zeros of `F` and of the Chern derivative `F₁ = ∂F − z̄F`, classifies
//!   them, and aggregates Monte-Carlo statistics;
//! * an analytic track ([`kac_rice`], [`special`]) that evaluates the jet
//!   covariance, the Kac–Rice integrals and the closed-form intensities and
//!   ordinate densities by quadrature.
//!
//! [`stft`] ties the analytic-function picture to the time-frequency one: the
//! Gaussian-window spectrogram of truncated white noise equals
//! `|e^{-|z|²/2} F(z)|²`.
//!
//! Intensities are reported per unit of `dν = dA/π`, under which the GEF has
//! one zero per unit area.

pub mod error;
pub mod experiments;
pub mod gef;
pub mod kac_rice;
pub mod points;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stft;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `e^{-|z|²/2}`, the Gaussian weight that turns Fock-space fields into
/// translation-invariant ones.
#[inline]
pub fn gauss_weight(z: Complex64) -> f64 {
    (-0.5 * z.norm_sqr()).exp()
}
