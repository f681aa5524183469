use serde::{Deserialize, Serialize};

use super::{mean_and_se, Ensemble, FieldFamily};
use crate::error::{Error, Result};
use crate::kac_rice::{ordinate_mass, CritClass};
use crate::points::{PointClass, PointRecord};

/// Below this many pooled counts a bin's sample standard error is
/// unreliable and is floored by the Poisson error of the theoretical mean.
const SPARSE_BIN_COUNT: usize = 10;

/// Binned ordinate density per `ν`-area next to the closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub class: CritClass,
    pub bin_edges: Vec<f64>,
    /// Mean over realizations of `count / (ν-area · bin width)`.
    pub empirical: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `∫_bin D / width`.
    pub theoretical: Vec<f64>,
    /// Pooled counts per bin over all realizations.
    pub counts: Vec<usize>,
    /// `Σ empirical · width`: intensity of points with ordinate in range.
    pub total_mass: f64,
    pub total_mass_se: f64,
    pub realizations: usize,
}

impl DensityHistogram {
    pub fn bins(&self) -> usize {
        self.empirical.len()
    }

    /// `|empirical − theoretical| / SE` per bin.
    pub fn z_scores(&self) -> Vec<f64> {
        self.empirical
            .iter()
            .zip(&self.theoretical)
            .zip(&self.std_errors)
            .map(|((e, t), s)| {
                let d = (e - t).abs();
                if d == 0.0 {
                    0.0
                } else {
                    d / s
                }
            })
            .collect()
    }

    /// Fraction of bins within `k` standard errors of the theory.
    pub fn fraction_within(&self, k: f64) -> f64 {
        let z = self.z_scores();
        z.iter().filter(|&&v| v <= k).count() as f64 / z.len() as f64
    }
}

fn in_class(class: CritClass, p: &PointRecord) -> bool {
    match class {
        CritClass::Max => p.class == PointClass::LocalMax,
        CritClass::Sadd => p.class == PointClass::Saddle,
        CritClass::Crit => p.class != PointClass::NotApplicable,
    }
}

/// Ordinate histogram of one critical-point class over `[0, x_max]` with
/// `bins` equal bins, from an ensemble of the Chern field.
pub fn ordinate_histogram(ensemble: &Ensemble, class: CritClass, bins: usize, x_max: f64) -> Result<DensityHistogram> {
    if ensemble.family != FieldFamily::Chern {
        return Err(Error::InvalidArgument(
            "ordinate histograms need critical points".into(),
        ));
    }
    if bins == 0 || !(x_max > 0.0) {
        return Err(Error::InvalidArgument(format!("{bins} bins on [0, {x_max}]")));
    }
    let accepted = ensemble.accepted()?;
    let n = accepted.len();
    let area = ensemble.config.area_nu();
    let width = x_max / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();

    // per_bin[b][i]: density contribution of realization i to bin b.
    let mut per_bin = vec![vec![0.0; n]; bins];
    let mut counts = vec![0usize; bins];
    let mut mass = vec![0.0; n];
    for (i, r) in accepted.iter().enumerate() {
        for p in r.points.iter().filter(|p| in_class(class, p)) {
            if p.ordinate >= x_max {
                continue;
            }
            let b = ((p.ordinate / width) as usize).min(bins - 1);
            per_bin[b][i] += 1.0 / (area * width);
            counts[b] += 1;
            mass[i] += 1.0 / area;
        }
    }

    let mut empirical = Vec::with_capacity(bins);
    let mut std_errors = Vec::with_capacity(bins);
    let mut theoretical = Vec::with_capacity(bins);
    for b in 0..bins {
        let (mean, se) = mean_and_se(&per_bin[b]);
        let theo = ordinate_mass(class, bin_edges[b], bin_edges[b + 1])? / width;
        let se = if counts[b] < SPARSE_BIN_COUNT {
            // Expected count per realization is theo · area · width.
            let poisson = (theo / (area * width * n as f64)).sqrt();
            se.max(poisson)
        } else {
            se
        };
        empirical.push(mean);
        std_errors.push(se);
        theoretical.push(theo);
    }
    let (total_mass, total_mass_se) = mean_and_se(&mass);
    Ok(DensityHistogram {
        class,
        bin_edges,
        empirical,
        std_errors,
        theoretical,
        counts,
        total_mass,
        total_mass_se,
        realizations: n,
    })
}
