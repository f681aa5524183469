//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails when any of criteria 1 to 11 fails; criterion 12 is
//! exploratory and only reported.

use std::fs;
use std::path::Path;
use std::time::Instant;

use gefcrit::experiments::{
    basin_ensemble, holomorphic_profile, ordinate_histogram, run_ensemble, BasinConfig, Ensemble, Exclusion,
    ExperimentConfig, FieldFamily, PointProcess,
};
use gefcrit::gef::{sample_coefficients, truncation_order};
use gefcrit::kac_rice::{
    basin_ratios, build_covariance, covariance_closed_form, covariance_finite_difference, intensity_quadrature,
    ordinate_density, ordinate_density_quadrature, ordinate_mass, CritClass, X_MAX,
};
use gefcrit::points::{find_critical_points_with, find_zeros_with, log_modulus_laplacian, FinderConfig};
use gefcrit::special::KernelId;
use gefcrit::stft::{spectrogram_identity_check, stft, tf_point, SampledSignal};
use gefcrit::Complex64;
use gefcrit_cli::{run_config, Command, RunConfig};

const SEED: u64 = 7;

struct Line {
    criterion: usize,
    passed: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn full_scale() -> ExperimentConfig {
    ExperimentConfig {
        region_radius: 5.0,
        realizations: 200,
        seed: SEED,
        ..ExperimentConfig::default()
    }
}

/// `(passed, detail)` for `|est − target| ≤ 3 SE` and, when given,
/// `SE ≤ rel_se · target`.
fn within_3se(name: &str, e: &Ensemble, kind: PointProcess, target: f64, rel_se: Option<f64>) -> (bool, String) {
    match e.intensity(kind) {
        Err(err) => (false, format!("{name}: {err}")),
        Ok(est) => {
            let z = est.z_score(target);
            let mut ok = z.abs() <= 3.0;
            if let Some(r) = rel_se {
                ok &= est.std_error <= r * target;
            }
            (
                ok,
                format!(
                    "{name} {:.4} ± {:.4} (target {:.4}, z {:+.2}, SE {:.2}%)",
                    est.intensity,
                    est.std_error,
                    target,
                    z,
                    100.0 * est.std_error / target
                ),
            )
        }
    }
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for class in CritClass::ALL {
        match intensity_quadrature(class) {
            Ok(q) => {
                let dev = (q.value - class.target_intensity()).abs();
                ok &= dev <= 1e-8;
                parts.push(format!("{class} {:.12} (dev {dev:.1e})", q.value));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{class}: {e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 1.0;
    Line {
        criterion: 1,
        passed: ok,
        detail: format!("Kac-Rice quadrature: {}; {secs:.3} s", parts.join(", ")),
    }
}

fn criterion_2() -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for class in [CritClass::Max, CritClass::Sadd] {
        match ordinate_mass(class, 0.0, X_MAX) {
            Ok(m) => {
                let dev = (m - class.target_intensity()).abs();
                ok &= dev <= 1e-8;
                parts.push(format!("mass {class} dev {dev:.1e}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("mass {class}: {e}"));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let x = 0.1 * i as f64;
        match ordinate_density_quadrature(x) {
            Ok((m, s)) => {
                worst = worst
                    .max((m - ordinate_density(CritClass::Max, x)).abs())
                    .max((s - ordinate_density(CritClass::Sadd, x)).abs());
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    ok &= worst <= 1e-8;
    parts.push(format!("pointwise max dev {worst:.1e} on x = 0.1..4"));
    Line {
        criterion: 2,
        passed: ok,
        detail: format!("ordinate densities: {}", parts.join(", ")),
    }
}

fn criterion_3(zeros: &Ensemble, chern: &Ensemble) -> Line {
    let checks = [
        within_3se("zeros", zeros, PointProcess::Zeros, 1.0, Some(0.025)),
        within_3se("crit", chern, PointProcess::Critical, 5.0 / 3.0, Some(0.025)),
        within_3se("max", chern, PointProcess::Max, 1.0 / 3.0, Some(0.025)),
        within_3se("saddle", chern, PointProcess::Saddle, 4.0 / 3.0, Some(0.025)),
    ];
    Line {
        criterion: 3,
        passed: checks.iter().all(|c| c.0),
        detail: format!(
            "Monte-Carlo intensities (R=5, 200 realizations): {}",
            checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; ")
        ),
    }
}

fn criterion_4(chern: &Ensemble) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for class in CritClass::ALL {
        match ordinate_histogram(chern, class, 40, 4.0) {
            Ok(h) => {
                let frac = h.fraction_within(4.0);
                let z = (h.total_mass - class.target_intensity()) / h.total_mass_se;
                ok &= frac >= 0.95 && z.abs() <= 3.0;
                parts.push(format!(
                    "{class}: {:.1}% bins within 4 SE, mass {:.4} (z {z:+.2})",
                    100.0 * frac,
                    h.total_mass
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{class}: {e}"));
            }
        }
    }
    Line {
        criterion: 4,
        passed: ok,
        detail: format!("ordinate histograms: {}", parts.join("; ")),
    }
}

fn criterion_5(zeros: &Ensemble) -> Line {
    let first: Vec<_> = zeros.realizations.iter().filter(|r| r.index < 100).collect();
    let discrepant: Vec<u64> = first
        .iter()
        .filter(|r| {
            matches!(
                r.exclusion,
                Some(Exclusion::OracleMismatch { .. }) | Some(Exclusion::OracleFailure(_))
            )
        })
        .map(|r| r.index)
        .collect();
    let agree = first.len() - discrepant.len();
    Line {
        criterion: 5,
        passed: first.len() == 100 && agree >= 99,
        detail: format!("oracle equivalence: {agree}/100 runs agree at R=5, discrepant {discrepant:?}"),
    }
}

fn criterion_6() -> Line {
    let window = match SampledSignal::hermite(0) {
        Ok(w) => w,
        Err(e) => {
            return Line {
                criterion: 6,
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let points: Vec<Complex64> = (0..10)
        .map(|i| Complex64::from_polar(0.3 + 0.27 * i as f64, 0.9 * i as f64 + 0.2))
        .collect();
    let mut hermite_worst: f64 = 0.0;
    for k in 0..=15usize {
        let Ok(hk) = SampledSignal::hermite(k) else {
            hermite_worst = f64::INFINITY;
            continue;
        };
        let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
        for &z in &points {
            let (x, xi) = tf_point(z);
            let expected = (k as f64 * z.norm().ln() - 0.5 * z.norm_sqr() - 0.5 * ln_fact).exp();
            let err = match stft(&hk, &window, x, xi) {
                Ok(v) => (v.value.norm() - expected).abs(),
                Err(_) => f64::INFINITY,
            };
            hermite_worst = hermite_worst.max(err);
        }
    }
    let grid: Vec<Complex64> = (0..200)
        .map(|k| {
            let r = 3.0 * ((k as f64 * 0.618_033_988_75).fract()).sqrt();
            Complex64::from_polar(r, k as f64 * 2.399_963)
        })
        .collect();
    let mut spec_worst: f64 = 0.0;
    let mut flagged = 0;
    for i in 0..20 {
        match spectrogram_identity_check(&sample_coefficients(80, SEED, i), &grid) {
            Ok(chk) => {
                spec_worst = spec_worst.max(chk.max_error);
                flagged += chk.flagged.len();
            }
            Err(_) => spec_worst = f64::INFINITY,
        }
    }
    Line {
        criterion: 6,
        passed: hermite_worst < 1e-6 && spec_worst < 1e-5 && flagged == 0,
        detail: format!(
            "STFT: Hermite identity max error {hermite_worst:.1e} (k <= 15, 10 points); spectrogram max error {spec_worst:.1e} (20 draws, N=80, |z| <= 3, {flagged} flagged)"
        ),
    }
}

fn criterion_7(holo: &Ensemble) -> Line {
    let edges: Vec<f64> = (0..=5).map(|i| 0.8 * i as f64).collect();
    match holomorphic_profile(holo, &edges) {
        Err(e) => Line {
            criterion: 7,
            passed: false,
            detail: e.to_string(),
        },
        Ok(prof) => {
            let ok = prof.iter().all(|a| a.z_score().abs() <= 3.0);
            let inner = prof[0];
            let excess = inner.intensity - 1.0 > 2.0 * inner.std_error;
            Line {
                criterion: 7,
                passed: ok && excess,
                detail: format!(
                    "holomorphic critical profile: {}; inner annulus exceeds 1 by {:.1} SE",
                    prof.iter()
                        .map(|a| format!("[{:.1},{:.1}] {:.3}/{:.3} z {:+.2}", a.rho_lo, a.rho_hi, a.intensity, a.target, a.z_score()))
                        .collect::<Vec<_>>()
                        .join(", "),
                    (inner.intensity - 1.0) / inner.std_error
                ),
            }
        }
    }
}

fn criterion_8(r1: &Ensemble, r2: &Ensemble) -> Line {
    let a = within_3se("r=1", r1, PointProcess::HermiteZeros(1), 5.0 / 3.0, None);
    let b = within_3se("r=2", r2, PointProcess::HermiteZeros(2), 2.6, None);
    Line {
        criterion: 8,
        passed: a.0 && b.0,
        detail: format!("Hermite-window spectrogram zeros: {}; {}", a.1, b.1),
    }
}

fn criterion_9() -> Line {
    let radius = 5.0;
    let cfg = FinderConfig::default();
    let n = truncation_order(radius + cfg.buffer + 1.0, 1e-12);
    let mut min_dv = f64::INFINITY;
    let mut min_sep = f64::INFINITY;
    let mut worst_lap: f64 = 0.0;
    let mut tested = 0;
    for i in 0..50 {
        let d = sample_coefficients(n, SEED, i);
        let zeros = find_zeros_with(&d, radius, &cfg).points;
        let crit = find_critical_points_with(&d, radius, &cfg).points;
        for z in &zeros {
            min_dv = min_dv.min(z.v.norm());
            for p in &crit {
                min_sep = min_sep.min((z.location - p.location).norm());
            }
        }
        let mut k = 0u64;
        let mut here = 0;
        while here < 100 {
            k += 1;
            let r = radius * ((k as f64 * 0.618_033_988_75 + i as f64 * 0.1).fract()).sqrt();
            let z = Complex64::from_polar(r, k as f64 * 2.399_963 + i as f64);
            if zeros.iter().any(|p| (p.location - z).norm() < 0.05) {
                continue;
            }
            worst_lap = worst_lap.max((log_modulus_laplacian(&d, z, 1e-4) + 2.0).abs());
            here += 1;
        }
        tested += here;
    }
    Line {
        criterion: 9,
        passed: min_dv > 1e-6 && min_sep > 1e-3 && worst_lap <= 1e-2,
        detail: format!(
            "simplicity and repulsion (50 draws, R=5): min weighted |F'| at zeros {min_dv:.3e}, min zero-critical distance {min_sep:.3e}, max |ΔU + 2| {worst_lap:.1e} over {tested} points"
        ),
    }
}

fn criterion_10() -> Line {
    let mut diag = nalgebra::Matrix3::zeros();
    diag[(0, 0)] = c(1.0, 0.0);
    diag[(1, 1)] = c(2.0, 0.0);
    diag[(2, 2)] = c(1.0, 0.0);
    let points = [c(0.0, 0.0), c(0.7, -0.3), c(-1.2, 0.9), c(2.0, 1.0)];
    let run = || -> gefcrit::Result<(f64, f64, f64)> {
        let base = build_covariance(KernelId::Landau(0), points[0])?;
        let (mut d, mut shift, mut fd) = (0.0f64, 0.0f64, 0.0f64);
        for &z in &points {
            let cov = build_covariance(KernelId::Landau(0), z)?;
            d = d.max(cov.max_abs_diff(&diag));
            shift = shift.max(cov.max_abs_diff(&base.matrix));
            for k in [KernelId::Landau(0), KernelId::Landau(1), KernelId::Landau(2), KernelId::BiEntire] {
                let a = covariance_closed_form(k, z)?;
                let b = covariance_finite_difference(k, z)?;
                fd = fd.max(a.max_abs_diff(&b.matrix));
            }
        }
        Ok((d, shift, fd))
    };
    match run() {
        Ok((d, shift, fd)) => Line {
            criterion: 10,
            passed: d <= 1e-12 && shift <= 1e-10 && fd <= 1e-6,
            detail: format!(
                "covariance assembly: |C - diag(1,2,1)| {d:.1e}, z-dependence {shift:.1e}, closed form vs finite differences {fd:.1e}"
            ),
        },
        Err(e) => Line {
            criterion: 10,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn criterion_11() -> Line {
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, threads) in [1usize, 4].into_iter().enumerate() {
        let mut cfg = RunConfig::defaults(Command::Simulate);
        cfg.kind = "critical".into();
        cfg.region_radius = 3.0;
        cfg.realizations = 20;
        cfg.master_seed = SEED;
        cfg.threads = threads;
        cfg.output_dir = tmp.path().join(format!("t{i}"));
        match run_config(&cfg) {
            Ok(o) => runs.push(csv_bytes(&o.run_dir)),
            Err(e) => {
                return Line {
                    criterion: 11,
                    passed: false,
                    detail: e.to_string(),
                }
            }
        }
    }
    let same = runs[0] == runs[1] && !runs[0].is_empty();
    Line {
        criterion: 11,
        passed: same,
        detail: format!(
            "determinism: {} CSV files byte-identical with 1 and 4 threads: {same}",
            runs[0].len()
        ),
    }
}

fn criterion_12(bientire: &Ensemble) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    let exp = ExperimentConfig {
        realizations: 50,
        ..full_scale()
    };
    match (basin_ensemble(&exp, &BasinConfig::default()), basin_ratios()) {
        (Ok(b), Ok((zero_target, max_target))) => {
            let zr = b.zero_neighbor_mean / zero_target - 1.0;
            let mr = b.max_meeting_mean / max_target - 1.0;
            let sr = b.saddle_neighbor_mean / zero_target - 1.0;
            ok &= zr.abs() <= 0.10 && mr.abs() <= 0.15;
            parts.push(format!(
                "basin neighbours per zero {:.3} ± {:.3} vs 8/3 ({:+.1}%), basins per maximum {:.3} ± {:.3} vs 8 ({:+.1}%), saddle-linked neighbours {:.3} ± {:.3} ({:+.1}%)",
                b.zero_neighbor_mean,
                b.zero_neighbor_se,
                100.0 * zr,
                b.max_meeting_mean,
                b.max_meeting_se,
                100.0 * mr,
                b.saddle_neighbor_mean,
                b.saddle_neighbor_se,
                100.0 * sr
            ));
        }
        (Err(e), _) | (_, Err(e)) => {
            ok = false;
            parts.push(e.to_string());
        }
    }
    match bientire.intensity(PointProcess::BientireZeros) {
        Ok(est) => {
            let rel = est.std_error / est.intensity;
            ok &= rel <= 0.03;
            parts.push(format!(
                "bi-entire zeros {:.4} ± {:.4} (SE {:.2}%)",
                est.intensity,
                est.std_error,
                100.0 * rel
            ));
        }
        Err(e) => {
            ok = false;
            parts.push(e.to_string());
        }
    }
    Line {
        criterion: 12,
        passed: ok,
        detail: format!("exploratory: {}", parts.join("; ")),
    }
}

fn ensemble(family: FieldFamily) -> Ensemble {
    let start = Instant::now();
    let e = run_ensemble(family, &full_scale()).unwrap_or_else(|err| panic!("{family:?} ensemble: {err}"));
    eprintln!("  ({family:?} ensemble: {:.1} s)", start.elapsed().as_secs_f64());
    e
}

fn report(line: &Line) {
    let status = match (line.passed, line.criterion) {
        (true, _) => "PASS",
        (false, 12) => "FAIL (non-fatal)",
        (false, _) => "FAIL",
    };
    println!("criterion {:>2}: {status}  {}", line.criterion, line.detail);
}

fn main() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut emit = |line: Line| {
        report(&line);
        lines.push(line);
    };
    emit(criterion_1());
    emit(criterion_2());
    let zeros = ensemble(FieldFamily::Analytic);
    let chern = ensemble(FieldFamily::Chern);
    emit(criterion_3(&zeros, &chern));
    emit(criterion_4(&chern));
    emit(criterion_5(&zeros));
    drop((zeros, chern));
    emit(criterion_6());
    emit(criterion_7(&ensemble(FieldFamily::Derivative)));
    emit(criterion_8(&ensemble(FieldFamily::Raised(1)), &ensemble(FieldFamily::Raised(2))));
    emit(criterion_9());
    emit(criterion_10());
    emit(criterion_11());
    emit(criterion_12(&ensemble(FieldFamily::BiEntire)));

    let failed: Vec<usize> = lines
        .iter()
        .filter(|l| !l.passed && l.criterion != 12)
        .map(|l| l.criterion)
        .collect();
    println!(
        "acceptance: {}/11 required criteria passed in {:.0} s",
        11 - failed.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
