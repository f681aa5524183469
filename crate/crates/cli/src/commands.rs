//! One function per subcommand. Each writes its result files through a
//! [`RunWriter`] and fills in the checks of the summary.

use std::fs;
use std::path::Path;

use gefcrit::experiments::{
    basin_ensemble, empirical_kernel_check, holomorphic_profile, ordinate_histogram, run_ensemble, BasinConfig,
    Ensemble, FieldFamily, PointProcess,
};
use gefcrit::gef::sample_coefficients;
use gefcrit::kac_rice::{
    basin_ratios, build_covariance, covariance_closed_form, covariance_finite_difference, density_normalization,
    intensity_quadrature, ordinate_density, ordinate_density_quadrature, ordinate_mass, CritClass, X_MAX,
};
use gefcrit::points::{find_zeros_with, PointClass};
use gefcrit::special::KernelId;
use gefcrit::stft::{spectrogram_identity_check, stft, tf_point, SampledSignal};
use gefcrit::Complex64;
use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::config::{Command, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::output::{num, opt_num, read_manifest, RunWriter, Table, MANIFEST_COMMENT, POINTS_FILE, SUMMARY_JSON};
use crate::plot::{self, Series};
use crate::summary::{Check, Summary};

/// Upper end of the ordinate histograms.
pub const HISTOGRAM_X_MAX: f64 = 4.0;
/// Outer radius of the holomorphic critical-point profile.
pub const PROFILE_MAX_RADIUS: f64 = 4.0;
pub const PROFILE_ANNULI: usize = 5;
/// Truncation order of the white-noise draws in `verify-stft`.
pub const STFT_NOISE_ORDER: usize = 80;
/// Radius of the spectrogram comparison grid.
pub const STFT_GRID_RADIUS: f64 = 3.0;

pub fn dispatch(cfg: &RunConfig, w: &mut RunWriter) -> Result<Summary> {
    let mut s = Summary::new(w.hash(), &cfg.command.to_string());
    match cfg.command {
        Command::Simulate => simulate(cfg, w, &mut s)?,
        Command::KacRice => kac_rice(w, &mut s)?,
        Command::VerifyKernels => verify_kernels(cfg, w, &mut s)?,
        Command::VerifyStft => verify_stft(cfg, w, &mut s)?,
        Command::Basins => basins(cfg, w, &mut s)?,
        Command::Report => {
            return Err(CliError::InvalidField {
                field: "command",
                reason: "`report` reads an existing run directory".into(),
            })
        }
    }
    Ok(s)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn simulate(cfg: &RunConfig, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let process = cfg.process()?;
    let exp = cfg.experiment();
    let family = process.family();
    let ensemble = run_ensemble(family, &exp)?;
    let accepted = ensemble.accepted()?;

    let mut points = Table::new(&[
        "run_id",
        "realization",
        "kind",
        "class",
        "re_z",
        "im_z",
        "ordinate",
        "abs_u",
        "abs_v",
        "residual",
    ]);
    for r in &accepted {
        for p in &r.points {
            points.push(vec![
                w.hash().to_string(),
                r.index.to_string(),
                p.kind.to_string(),
                p.class.to_string(),
                num(p.location.re),
                num(p.location.im),
                num(p.ordinate),
                num(p.u.norm()),
                num(p.v.norm()),
                num(p.residual),
            ]);
        }
    }
    w.csv(POINTS_FILE, &points)?;

    let kinds = match family {
        FieldFamily::Chern => vec![PointProcess::Critical, PointProcess::Max, PointProcess::Saddle],
        _ => vec![process],
    };
    let mut intensity = Table::new(&[
        "kind",
        "intensity_nu",
        "intensity_lebesgue",
        "std_error",
        "realizations",
        "target",
        "z_score",
    ]);
    for kind in kinds {
        let est = ensemble.intensity(kind)?;
        let target = kind.target();
        intensity.push(vec![
            kind.to_string(),
            num(est.intensity),
            num(est.intensity_lebesgue()),
            num(est.std_error),
            est.realizations.to_string(),
            opt_num(target),
            opt_num(target.map(|t| est.z_score(t))),
        ]);
        match target {
            Some(t) => s.checks.push(Check::within_se(
                format!("intensity_{kind}"),
                est.intensity,
                t,
                est.std_error,
                3.0,
            )),
            None => s.checks.push(Check::record(format!("intensity_{kind}"), est.intensity, Some(est.std_error))),
        }
        if kind == PointProcess::BientireZeros {
            s.checks
                .push(Check::at_most("bientire_relative_se", est.std_error / est.intensity, 0.03).exploratory());
        }
    }
    w.csv("intensity.csv", &intensity)?;

    match family {
        FieldFamily::Chern => histograms(cfg, &ensemble, w, s)?,
        FieldFamily::Derivative => profile(cfg, &ensemble, w, s)?,
        _ => {}
    }
    scatter(cfg, process, &ensemble, w)?;

    let d = ensemble.diagnostics();
    s.notes.push(format!(
        "{} of {} realizations excluded",
        ensemble.excluded(),
        ensemble.realizations.len()
    ));
    s.notes.push(format!(
        "finder: {} candidate cells, {} failed, {} diverged seeds, {} degenerate points",
        d.candidate_cells, d.failed_cells, d.diverged_seeds, d.degenerate
    ));
    Ok(())
}

fn histograms(cfg: &RunConfig, ensemble: &Ensemble, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let mut t = Table::new(&["class", "bin_lo", "bin_hi", "empirical", "std_error", "theoretical"]);
    for class in CritClass::ALL {
        let h = ordinate_histogram(ensemble, class, cfg.bins, HISTOGRAM_X_MAX)?;
        for i in 0..h.bins() {
            t.push(vec![
                class.to_string(),
                num(h.bin_edges[i]),
                num(h.bin_edges[i + 1]),
                num(h.empirical[i]),
                num(h.std_errors[i]),
                num(h.theoretical[i]),
            ]);
        }
        s.checks.push(Check::at_least(
            format!("histogram_{class}_bins_within_4se"),
            h.fraction_within(4.0),
            0.95,
        ));
        s.checks.push(Check::within_se(
            format!("histogram_{class}_mass"),
            h.total_mass,
            class.target_intensity(),
            h.total_mass_se,
            3.0,
        ));
        let curve: Vec<(f64, f64)> = (0..=200)
            .map(|i| {
                let x = HISTOGRAM_X_MAX * i as f64 / 200.0;
                (x, ordinate_density(class, x))
            })
            .collect();
        let svg = plot::histogram(
            &format!("ordinate density, {class}"),
            &h.bin_edges,
            &h.empirical,
            &curve,
        );
        w.svg(&format!("histogram_{class}.svg"), &svg)?;
    }
    w.csv("histogram.csv", &t)
}

fn profile(cfg: &RunConfig, ensemble: &Ensemble, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let outer = PROFILE_MAX_RADIUS.min(cfg.region_radius);
    let edges: Vec<f64> = (0..=PROFILE_ANNULI)
        .map(|i| outer * i as f64 / PROFILE_ANNULI as f64)
        .collect();
    let prof = holomorphic_profile(ensemble, &edges)?;
    let mut t = Table::new(&["rho_lo", "rho_hi", "intensity", "std_error", "target", "z_score"]);
    for a in &prof {
        t.push(vec![
            num(a.rho_lo),
            num(a.rho_hi),
            num(a.intensity),
            num(a.std_error),
            num(a.target),
            num(a.z_score()),
        ]);
        s.checks.push(Check::within_se(
            format!("profile_{:.2}_{:.2}", a.rho_lo, a.rho_hi),
            a.intensity,
            a.target,
            a.std_error,
            3.0,
        ));
    }
    let inner = prof[0];
    s.checks.push(Check::at_least(
        "profile_inner_excess_z",
        (inner.intensity - 1.0) / inner.std_error,
        2.0,
    ));
    w.csv("profile.csv", &t)
}

/// Points of the first accepted realization; for the Chern field the zeros
/// of `F` of the same draw are added.
fn scatter(cfg: &RunConfig, process: PointProcess, ensemble: &Ensemble, w: &mut RunWriter) -> Result<()> {
    let Some(first) = ensemble.realizations.iter().find(|r| r.exclusion.is_none()) else {
        return Ok(());
    };
    let xy = |z: Complex64| (z.re, z.im);
    let mut series = Vec::new();
    if ensemble.family == FieldFamily::Chern {
        let exp = cfg.experiment();
        let zeros = find_zeros_with(&exp.draw(first.index), cfg.region_radius, &exp.finder());
        series.push(Series {
            label: "zeros",
            color: "black",
            points: zeros.points.iter().map(|p| xy(p.location)).collect(),
        });
        for (class, label, color) in [
            (PointClass::LocalMax, "local maxima", "#d62728"),
            (PointClass::Saddle, "saddles", "#1f77b4"),
        ] {
            series.push(Series {
                label,
                color,
                points: first
                    .points
                    .iter()
                    .filter(|p| p.class == class)
                    .map(|p| xy(p.location))
                    .collect(),
            });
        }
    } else {
        series.push(Series {
            label: "points",
            color: "black",
            points: first.points.iter().map(|p| xy(p.location)).collect(),
        });
    }
    let title = format!("{process}, realization {}", first.index);
    w.svg("scatter.svg", &plot::scatter(&title, cfg.region_radius, &series))
}

fn kac_rice(w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let mut t = Table::new(&["quantity", "value", "target", "abs_error", "deviation"]);
    for class in CritClass::ALL {
        let q = intensity_quadrature(class)?;
        let target = class.target_intensity();
        let name = format!("intensity_{class}");
        t.push(vec![
            name.clone(),
            num(q.value),
            num(target),
            num(q.abs_error),
            num((q.value - target).abs()),
        ]);
        s.checks.push(Check::absolute(name, q.value, target, 1e-8));
    }
    for class in [CritClass::Max, CritClass::Sadd] {
        let m = ordinate_mass(class, 0.0, X_MAX)?;
        let target = class.target_intensity();
        let name = format!("ordinate_mass_{class}");
        t.push(vec![name.clone(), num(m), num(target), String::new(), num((m - target).abs())]);
        s.checks.push(Check::absolute(name, m, target, 1e-8));
    }
    let n = density_normalization()?;
    t.push(vec![
        "density_normalization".into(),
        num(n.value),
        num(1.0),
        num(n.abs_error),
        num((n.value - 1.0).abs()),
    ]);
    s.checks.push(Check::absolute("density_normalization", n.value, 1.0, 1e-8));
    w.csv("kac_rice.csv", &t)?;

    let mut t = Table::new(&["x", "max_closed", "sadd_closed", "max_quadrature", "sadd_quadrature"]);
    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let x = 0.1 * i as f64;
        let (mq, sq) = ordinate_density_quadrature(x)?;
        let (mc, sc) = (ordinate_density(CritClass::Max, x), ordinate_density(CritClass::Sadd, x));
        worst = worst.max((mq - mc).abs()).max((sq - sc).abs());
        t.push(vec![num(x), num(mc), num(sc), num(mq), num(sq)]);
    }
    s.checks.push(Check::at_most("ordinate_pointwise_max_error", worst, 1e-8));
    w.csv("ordinate.csv", &t)
}

fn verify_kernels(cfg: &RunConfig, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let points = [c(0.0, 0.0), c(0.7, -0.3), c(-1.2, 0.9), c(2.0, 1.0)];
    let mut t = Table::new(&["kernel", "re_z", "im_z", "diag_defect", "fd_difference", "hermitian_defect"]);

    let diag = Matrix3::from_diagonal(&nalgebra::Vector3::new(c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)));
    let base = build_covariance(KernelId::Landau(0), c(0.0, 0.0))?;
    let (mut diag_worst, mut shift_worst): (f64, f64) = (0.0, 0.0);
    for kernel in [KernelId::Landau(0), KernelId::Landau(1), KernelId::Landau(2), KernelId::BiEntire] {
        let mut fd_worst: f64 = 0.0;
        for &z in &points {
            let closed = covariance_closed_form(kernel, z)?;
            let fd = covariance_finite_difference(kernel, z)?;
            let fd_diff = closed.max_abs_diff(&fd.matrix);
            fd_worst = fd_worst.max(fd_diff);
            let diag_defect = if kernel == KernelId::Landau(0) {
                let cov = build_covariance(kernel, z)?;
                let d = cov.max_abs_diff(&diag);
                diag_worst = diag_worst.max(d);
                shift_worst = shift_worst.max(cov.max_abs_diff(&base.matrix));
                Some(d)
            } else {
                None
            };
            t.push(vec![
                kernel.to_string(),
                num(z.re),
                num(z.im),
                opt_num(diag_defect),
                num(fd_diff),
                num(closed.hermitian_defect()),
            ]);
        }
        s.checks.push(Check::at_most(format!("covariance_{kernel}_closed_vs_fd"), fd_worst, 1e-6));
    }
    s.checks.push(Check::at_most("covariance_landau(0)_diag_1_2_1", diag_worst, 1e-12));
    s.checks.push(Check::at_most("covariance_landau(0)_z_independence", shift_worst, 1e-10));
    w.csv("covariance.csv", &t)?;

    let pairs = [(c(0.3, -0.2), c(0.9, 0.4)), (c(-1.0, 0.5), c(-0.4, 0.1)), (c(0.5, 0.5), c(0.5, 0.5))];
    let kernels = [
        KernelId::Landau(0),
        KernelId::Landau(1),
        KernelId::Landau(2),
        KernelId::BiEntire,
        KernelId::WeylHeisenbergHermite(0),
        KernelId::WeylHeisenbergHermite(1),
    ];
    let mut t = Table::new(&[
        "kernel",
        "re_z",
        "im_z",
        "re_w",
        "im_w",
        "empirical_re",
        "empirical_im",
        "theoretical_re",
        "theoretical_im",
        "std_error",
        "z_score",
    ]);
    for (k, kernel) in kernels.into_iter().enumerate() {
        let check = empirical_kernel_check(kernel, &pairs, cfg.draws, cfg.master_seed.wrapping_add(k as u64))?;
        for p in &check.pairs {
            t.push(vec![
                kernel.to_string(),
                num(p.z.re),
                num(p.z.im),
                num(p.w.re),
                num(p.w.im),
                num(p.empirical.re),
                num(p.empirical.im),
                num(p.theoretical.re),
                num(p.theoretical.im),
                num(p.std_error),
                num(p.z_score()),
            ]);
        }
        s.checks.push(Check {
            name: format!("kernel_{kernel}_max_z"),
            value: check.max_z_score,
            target: None,
            std_error: Some(check.std_error_at_max),
            z_score: Some(check.max_z_score),
            tolerance: "|z| <= 4 at every pair".into(),
            passed: check.max_z_score <= 4.0,
            fatal: true,
        });
    }
    w.csv("kernels.csv", &t)
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn verify_stft(cfg: &RunConfig, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let mut t = Table::new(&["check", "index", "re_z", "im_z", "modulus", "expected", "error", "flagged"]);
    let window = SampledSignal::hermite(0)?;
    let points: Vec<Complex64> = (0..10)
        .map(|i| Complex64::from_polar(0.3 + 0.27 * i as f64, 0.9 * i as f64 + 0.2))
        .collect();
    let mut worst: f64 = 0.0;
    for k in 0..=15usize {
        let hk = SampledSignal::hermite(k)?;
        for &z in &points {
            let (x, xi) = tf_point(z);
            let v = stft(&hk, &window, x, xi)?;
            // |V_g h_k| = |z|^k e^{−|z|²/2} / √k!
            let expected = (k as f64 * z.norm().ln() - 0.5 * z.norm_sqr() - 0.5 * ln_factorial(k)).exp();
            let err = (v.value.norm() - expected).abs();
            worst = worst.max(err);
            t.push(vec![
                "hermite".into(),
                k.to_string(),
                num(z.re),
                num(z.im),
                num(v.value.norm()),
                num(expected),
                num(err),
                usize::from(v.truncated).to_string(),
            ]);
        }
    }
    s.checks.push(Check::at_most("hermite_identity_max_error", worst, 1e-6));

    let grid = disk_grid(STFT_GRID_RADIUS, cfg.grid_step);
    let checks = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| spectrogram_identity_check(&sample_coefficients(STFT_NOISE_ORDER, cfg.master_seed, i), &grid))
        .collect::<gefcrit::Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    let mut flagged = 0;
    for (i, chk) in checks.iter().enumerate() {
        worst = worst.max(chk.max_error);
        flagged += chk.flagged.len();
        t.push(vec![
            "spectrogram".into(),
            i.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            num(chk.max_error),
            chk.flagged.len().to_string(),
        ]);
    }
    s.checks.push(Check::at_most("spectrogram_identity_max_error", worst, 1e-5));
    s.checks.push(Check::at_most("spectrogram_flagged_points", flagged as f64, 0.0));
    s.notes.push(format!(
        "spectrogram: {} draws of order {STFT_NOISE_ORDER} on {} grid points in |z| <= {STFT_GRID_RADIUS}",
        checks.len(),
        grid.len()
    ));
    w.csv("stft.csv", &t)
}

/// Square grid of spacing `step` clipped to the disk of radius `r`.
pub fn disk_grid(r: f64, step: f64) -> Vec<Complex64> {
    let n = (r / step).floor() as i64;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let z = c(i as f64 * step, j as f64 * step);
            if z.norm() <= r {
                out.push(z);
            }
        }
    }
    out
}

fn basins(cfg: &RunConfig, w: &mut RunWriter, s: &mut Summary) -> Result<()> {
    let be = basin_ensemble(&cfg.experiment(), &BasinConfig::default())?;
    let (zero_target, max_target) = basin_ratios()?;
    let mut t = Table::new(&[
        "report",
        "zero_neighbor_mean",
        "max_meeting_mean",
        "saddle_neighbor_mean",
        "unresolved_fraction",
        "zeros_used",
        "maxima_used",
        "nodes",
    ]);
    for (i, r) in be.reports.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            num(r.zero_neighbor_mean),
            num(r.max_meeting_mean),
            num(r.saddle_neighbor_mean),
            num(r.unresolved_fraction),
            r.zeros_used.to_string(),
            r.maxima_used.to_string(),
            r.nodes.to_string(),
        ]);
    }
    s.checks.push(
        Check::relative(
            "basin_zero_neighbors",
            be.zero_neighbor_mean,
            zero_target,
            Some(be.zero_neighbor_se),
            0.10,
        )
        .exploratory(),
    );
    s.checks.push(
        Check::relative(
            "basin_max_meeting",
            be.max_meeting_mean,
            max_target,
            Some(be.max_meeting_se),
            0.15,
        )
        .exploratory(),
    );
    s.checks.push(
        Check::relative(
            "saddle_zero_neighbors",
            be.saddle_neighbor_mean,
            zero_target,
            Some(be.saddle_neighbor_se),
            0.10,
        )
        .exploratory(),
    );
    s.notes.push(format!(
        "{} basin reports accepted, {} rejected for unresolved nodes",
        be.reports.len(),
        be.rejected
    ));
    w.csv("basins.csv", &t)
}

/// Hash embedded in one result file, if any.
fn embedded_hash(name: &str, text: &str) -> Result<Option<String>> {
    if name.ends_with(".csv") {
        let Some(first) = text.lines().next().and_then(|l| l.strip_prefix(MANIFEST_COMMENT)) else {
            return Ok(None);
        };
        if name == POINTS_FILE {
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
            for row in rdr.records() {
                let row = row?;
                if row.get(0) != Some(first) {
                    return Ok(row.get(0).map(str::to_string));
                }
            }
        }
        return Ok(Some(first.to_string()));
    }
    if name == SUMMARY_JSON {
        let s: Summary = serde_json::from_str(text)?;
        return Ok(Some(s.manifest));
    }
    Ok(text.find("manifest").and_then(|i| {
        let rest = &text[i + "manifest".len()..];
        let rest = rest.strip_prefix('=').or_else(|| rest.strip_prefix(' '))?;
        let hash: String = rest.chars().take_while(|c| c.is_ascii_hexdigit()).collect();
        (!hash.is_empty()).then_some(hash)
    }))
}

/// Checks a run directory against its manifest and returns its summary.
pub fn report(run_dir: &Path) -> Result<Summary> {
    let m = read_manifest(run_dir)?;
    let recomputed = m.config.hash(&m.version);
    if recomputed != m.hash {
        return Err(CliError::ManifestTampered {
            recorded: m.hash,
            recomputed,
        });
    }
    for name in &m.files {
        let path = run_dir.join(name);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let found = embedded_hash(name, &text)?;
        if found.as_deref() != Some(m.hash.as_str()) {
            return Err(CliError::ManifestMismatch {
                file: path.display().to_string(),
                expected: m.hash.clone(),
                found: found.unwrap_or_else(|| "no hash".into()),
            });
        }
    }
    let path = run_dir.join(SUMMARY_JSON);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}
