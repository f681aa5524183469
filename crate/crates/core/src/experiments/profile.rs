use serde::{Deserialize, Serialize};

use super::{mean_and_se, Ensemble, FieldFamily};
use crate::error::{Error, Result};
use crate::kac_rice::holo_critical_annulus;

/// Intensity of holomorphic critical points in one annulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusEstimate {
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// Count per `ν`-area, averaged over realizations.
    pub intensity: f64,
    pub std_error: f64,
    /// Area average of `1 + (1 + ρ²)^{−2}` over the annulus.
    pub target: f64,
}

impl AnnulusEstimate {
    pub fn z_score(&self) -> f64 {
        (self.intensity - self.target) / self.std_error
    }
}

/// Annulus-binned intensity of the zeros of `∂F`.
///
/// `edges` are increasing radii starting anywhere `≥ 0`; the last edge must
/// not exceed the ensemble's region radius.
pub fn holomorphic_profile(ensemble: &Ensemble, edges: &[f64]) -> Result<Vec<AnnulusEstimate>> {
    if ensemble.family != FieldFamily::Derivative {
        return Err(Error::InvalidArgument(
            "radial profile needs holomorphic critical points".into(),
        ));
    }
    if edges.len() < 2
        || edges.windows(2).any(|w| !(w[1] > w[0]))
        || edges[0] < 0.0
        || *edges.last().expect("checked") > ensemble.config.region_radius
    {
        return Err(Error::InvalidArgument(format!("bad annulus edges {edges:?}")));
    }
    let accepted = ensemble.accepted()?;
    let mut out = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let area = hi * hi - lo * lo;
        let per: Vec<f64> = accepted
            .iter()
            .map(|r| {
                r.points
                    .iter()
                    .filter(|p| {
                        let rho = p.location.norm();
                        rho >= lo && rho < hi
                    })
                    .count() as f64
                    / area
            })
            .collect();
        let (intensity, std_error) = mean_and_se(&per);
        out.push(AnnulusEstimate {
            rho_lo: lo,
            rho_hi: hi,
            intensity,
            std_error,
            target: holo_critical_annulus(lo, hi),
        });
    }
    Ok(out)
}
