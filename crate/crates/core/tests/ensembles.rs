//! Small-scale ensemble behaviour: determinism, unit conventions, and the
//! aggregate types.

use gefcrit::experiments::{
    basin_analysis, holomorphic_profile, ordinate_histogram, run_ensemble, BasinConfig, ExperimentConfig,
    FieldFamily, PointProcess,
};
use gefcrit::gef::CoefficientDraw;
use gefcrit::kac_rice::CritClass;
use gefcrit::points::find_zeros;
use gefcrit::{Complex64, Error};

fn small(radius: f64, realizations: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        region_radius: radius,
        realizations,
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = small(3.0, 8, 61);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(FieldFamily::Chern, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    let ia = a.intensity(PointProcess::Max).unwrap();
    let ib = b.intensity(PointProcess::Max).unwrap();
    assert_eq!(ia.intensity.to_bits(), ib.intensity.to_bits());
    assert_eq!(ia.std_error.to_bits(), ib.std_error.to_bits());
}

#[test]
fn zero_count_scales_with_nu_area() {
    // One zero per unit of dν = dA/π means about R² zeros in the disk.
    for radius in [3.0, 4.0] {
        let e = run_ensemble(FieldFamily::Analytic, &small(radius, 40, 62)).unwrap();
        let est = e.intensity(PointProcess::Zeros).unwrap();
        assert_eq!(est.area_nu, radius * radius);
        assert!(est.z_score(1.0).abs() < 3.0, "R={radius}: {est:?}");
        assert!((est.intensity_lebesgue() * std::f64::consts::PI - est.intensity).abs() < 1e-15);
    }
}

#[test]
fn histogram_mass_matches_intensity() {
    let e = run_ensemble(FieldFamily::Chern, &small(3.0, 12, 63)).unwrap();
    let crit = e.intensity(PointProcess::Critical).unwrap();
    let h = ordinate_histogram(&e, CritClass::Crit, 40, 4.0).unwrap();
    assert_eq!(h.bins(), 40);
    assert_eq!(h.bin_edges.len(), 41);
    assert!(h.empirical.iter().chain(&h.theoretical).all(|&v| v >= 0.0));
    // Ordinates beyond 4 are essentially absent, so the binned mass is the
    // whole intensity.
    assert!((h.total_mass - crit.intensity).abs() < 1e-12);
    let theory_mass: f64 = h.theoretical.iter().sum::<f64>() * 0.1;
    assert!((theory_mass - 5.0 / 3.0).abs() < 1e-5);
}

#[test]
fn histogram_needs_critical_points() {
    let e = run_ensemble(FieldFamily::Analytic, &small(2.0, 3, 64)).unwrap();
    assert!(matches!(
        ordinate_histogram(&e, CritClass::Max, 10, 4.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn profile_annuli_cover_requested_edges() {
    let e = run_ensemble(FieldFamily::Derivative, &small(4.0, 10, 65)).unwrap();
    let prof = holomorphic_profile(&e, &[0.0, 1.0, 2.0, 4.0]).unwrap();
    assert_eq!(prof.len(), 3);
    assert!((prof[0].target - 1.5).abs() < 1e-12); // ∫₀¹ (1 + (1+ρ²)^{−2}) 2ρ dρ = 1 + 1/2
    assert!(holomorphic_profile(&e, &[0.0, 5.0]).is_err());
}

#[test]
fn single_zero_basin() {
    let d = CoefficientDraw::from_coefficients(vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
    // F = z − 1. Far out U = log|F| − |z|²/2 decreases outward and the flow
    // escapes, so only a small disk around the origin lies in the basin of 1.
    let zeros = find_zeros(&d, 4.0);
    let rep = basin_analysis(&d, &zeros, &[], 0.5, &BasinConfig::default()).unwrap();
    assert_eq!(rep.zero_neighbor_mean, 0.0);
    assert_eq!(rep.unresolved_fraction, 0.0);
    assert!(rep.nodes > 60, "{}", rep.nodes);
}
