//! End-to-end behaviour of the `gefcrit` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gefcrit(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gefcrit"));
    cmd.args(args).env_remove("GEFCRIT_OUTPUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("GEFCRIT_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn run_dir(out: &Output) -> PathBuf {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout
        .lines()
        .find_map(|l| l.strip_prefix("run directory: "))
        .unwrap_or_else(|| panic!("no run directory in {stdout}"));
    PathBuf::from(line)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn same_seed_gives_identical_csv_for_any_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ["simulate", "--kind", "critical", "--radius", "3", "--realizations", "6", "--seed", "7"];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3", "1"].into_iter().enumerate() {
        let out_dir = tmp.path().join(format!("run{i}"));
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "-o", out_dir.to_str().unwrap()]);
        let out = gefcrit(&args, None);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(csv_files(&run_dir(&out)));
    }
    assert!(outputs[0].len() >= 3);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn invalid_config_names_the_field_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "grid_step = 0.0\n").unwrap();
    let out_dir = tmp.path().join("out");
    let out = gefcrit(
        &["simulate", "--config", cfg.to_str().unwrap(), "-o", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid_step"));
    assert!(!out_dir.exists());

    let out = gefcrit(&["simulate", "--kind", "minima", "-o", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`kind`"));

    fs::write(&cfg, "seed = 3\n").unwrap();
    let out = gefcrit(&["kac-rice", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn report_accepts_intact_runs_and_refuses_mismatches() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gefcrit(&["kac-rice"], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(0));
    let dir = run_dir(&out);
    assert!(dir.starts_with(tmp.path()));

    let ok = gefcrit(&["report", dir.to_str().unwrap()], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("intensity_max"));

    // A results file from a different run.
    let other = gefcrit(&["verify-stft", "--realizations", "2"], Some(tmp.path()));
    assert_eq!(other.status.code(), Some(0));
    let alien = fs::read(run_dir(&other).join("stft.csv")).unwrap();
    let original = fs::read(dir.join("kac_rice.csv")).unwrap();
    fs::write(dir.join("kac_rice.csv"), alien).unwrap();
    let bad = gefcrit(&["report", dir.to_str().unwrap()], None);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("does not belong"));

    fs::write(dir.join("kac_rice.csv"), original).unwrap();
    assert_eq!(gefcrit(&["report", dir.to_str().unwrap()], None).status.code(), Some(0));

    // An edited manifest no longer matches its own hash.
    let manifest = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap();
    let edited = text.replace("\"master_seed\": 7", "\"master_seed\": 8");
    assert_ne!(edited, text);
    fs::write(&manifest, edited).unwrap();
    let bad = gefcrit(&["report", dir.to_str().unwrap()], None);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("does not match its config"));
}

#[test]
fn manifest_records_the_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "region_radius = 2.5\nrealizations = 4\nkind = \"zeros\"\nmaster_seed = 9\n").unwrap();
    let out = gefcrit(
        &["simulate", "--config", cfg.to_str().unwrap(), "--realizations", "3"],
        Some(tmp.path()),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = run_dir(&out);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["region_radius"], 2.5);
    assert_eq!(m["config"]["realizations"], 3);
    assert_eq!(m["config"]["master_seed"], 9);
    assert_eq!(m["config"]["kind"], "zeros");
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    let hash = m["hash"].as_str().unwrap();
    for f in m["files"].as_array().unwrap() {
        let text = fs::read_to_string(dir.join(f.as_str().unwrap())).unwrap();
        assert!(text.contains(hash), "{f} lacks the manifest hash");
    }
    // No staging directories are left behind.
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn numbers_round_trip_through_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gefcrit(&["kac-rice"], Some(tmp.path()));
    let dir = run_dir(&out);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.join("kac_rice.csv"))
        .unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["quantity", "value", "target", "abs_error", "deviation"]);
    for row in rdr.records() {
        let row = row.unwrap();
        let value: f64 = row[1].parse().unwrap();
        assert_eq!(format!("{value:?}"), &row[1]);
        if &row[0] == "intensity_max" {
            assert!((value - 1.0 / 3.0).abs() < 1e-8);
        }
    }
}
