use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use entangle::fixtures::{self, FIXTURE_ENV, HARDY_FILE, TABLE1_FILE};
use entangle::measurement::{records_to_csv_string, CountRecord};
use entangle::repro::limits::{BELL_TABLE, TABLE1_DIAG};
use entangle::tomography::table1_settings;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_entangle"));
    c.env(FIXTURE_ENV, fixtures::fixture_dir());
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn entangle")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("JSON output")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn fixture(name: &str) -> PathBuf {
    fixtures::fixture_dir().join(name)
}

fn write_counts(dir: &Path, name: &str, records: &[CountRecord]) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, records_to_csv_string(records).unwrap()).unwrap();
    p
}

#[test]
fn source_reports_epsilon_and_entropy() {
    let v = json(&run(&["source", "--chi-deg", "45", "--phi-deg", "0"]));
    assert!((f(&v["epsilon"]) - 1.0).abs() < 1e-12);
    assert!((f(&v["entanglement_entropy"]) - std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(v["density_matrix"]["basis"][3], "VV");

    let v = json(&run(&["source", "--chi-deg", "25.17"]));
    assert!((f(&v["epsilon"]) - 0.470).abs() < 5e-4);
}

#[test]
fn source_rejects_degenerate_pump() {
    let o = run(&["source", "--chi-deg", "90"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("chi"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, "{\n  \"source\": {\"chi_deg\": 30, \"phase\": 1}\n}").unwrap();
    let o = run(&["source", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("phase") && err.contains("line 2"), "{err}");
}

#[test]
fn simulate_is_deterministic_and_echoes_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "simulate",
            "--seed",
            "42",
            "--pairs",
            "71322",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(stderr(&o).contains("seed: 42"));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 17);

    let o = run(&["simulate", "--seed", "43", "--pairs", "71322"]);
    assert_ne!(o.stdout, fs::read(&a).unwrap());
}

#[test]
fn simulate_json_records_seed() {
    let v = json(&run(&[
        "simulate", "--seed", "5", "--format", "json", "--pairs", "1000",
    ]));
    assert_eq!(v["seed"], 5);
    assert_eq!(v["records"].as_array().unwrap().len(), 16);
}

#[test]
fn simulate_zero_pairs_gives_zero_counts() {
    let o = run(&["simulate", "--pairs", "0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("0")));
}

#[test]
fn config_drives_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("counts.csv");
    fs::write(
        &cfg,
        format!(
            r#"{{"source": {{"chi_deg": 25.17}}, "pairs_per_setting": 5e5, "noise": {{"rng_seed": 11}}, "out": {:?}}}"#,
            out
        ),
    )
    .unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("seed: 11"));
    let v = json(&run(&["tomo", out.to_str().unwrap(), "--target", "0.4699,0"]));
    assert!(f(&v["diagnostics"]["fidelity"]) > 0.99);
}

#[test]
fn tomo_reproduces_table1_diagonal() {
    let v = json(&run(&["tomo", fixture(TABLE1_FILE).to_str().unwrap()]));
    for (k, want) in TABLE1_DIAG.iter().enumerate() {
        let got = f(&v["density_matrix"]["re"][k][k]);
        assert!((got - want).abs() <= 1e-4, "diag {k}: {got}");
    }
    assert_eq!(v["projected"], false);
    assert_eq!(v["diagnostics"]["is_physical"], false);
}

#[test]
fn tomo_projection_yields_physical_state() {
    let v = json(&run(&[
        "tomo",
        fixture(TABLE1_FILE).to_str().unwrap(),
        "--project-physical",
        "--target",
        "1,0",
    ]));
    assert_eq!(v["projected"], true);
    assert_eq!(v["diagnostics"]["is_physical"], true);
    assert!(f(&v["raw_diagnostics"]["min_eigenvalue"]) < 0.0);
    assert!(f(&v["diagnostics"]["fidelity"]) > 0.9);
}

#[test]
fn tomo_of_ideal_bell_counts_is_pure() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<_> = table1_settings()
        .into_iter()
        .zip(BELL_TABLE)
        .map(|(p, q)| CountRecord::new(p, (q * 1e6).round() as u64, 100.0).unwrap())
        .collect();
    let path = write_counts(dir.path(), "bell.csv", &records);
    let v = json(&run(&["tomo", path.to_str().unwrap(), "--target", "1,0"]));
    let re = &v["density_matrix"]["re"];
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        assert!((f(&re[i][j]) - 0.5).abs() < 1e-9);
    }
    assert!((f(&v["diagnostics"]["purity"]) - 1.0).abs() < 1e-9);
    assert!((f(&v["diagnostics"]["fidelity"]) - 1.0).abs() < 1e-9);
}

#[test]
fn tomo_truncated_counts_is_scheme_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = fixtures::table1_records().unwrap();
    records.pop();
    let path = write_counts(dir.path(), "short.csv", &records);
    let o = run(&["tomo", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn tomo_zero_normalization_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let mut records = fixtures::table1_records().unwrap();
    for r in &mut records[..4] {
        r.coincidences = 0;
    }
    let path = write_counts(dir.path(), "zero.csv", &records);
    assert_eq!(run(&["tomo", path.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn tomo_malformed_csv_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "arm1,arm2,count,duration_s\nH,H,lots,100\n").unwrap();
    assert_eq!(run(&["tomo", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn minima_table_follows_the_locus() {
    let o = run(&["minima", "--epsilon", "1", "--from", "-90", "--to", "90", "--step", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta1_deg,theta2_min_deg,p_at_min"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 37);
    for r in rows {
        assert!(r[2] < 1e-12);
        // tan θ₂ = −cot θ₁, so θ₂ ≡ θ₁ − 90 (mod 180)
        let d = (r[1] - (r[0] - 90.0)).rem_euclid(180.0);
        assert!(d < 1e-9 || 180.0 - d < 1e-9, "{r:?}");
    }
    assert_eq!(run(&["minima", "--epsilon", "0"]).status.code(), Some(4));
}

#[test]
fn hardy_angles_at_operating_point() {
    let v = json(&run(&["hardy", "angles", "--epsilon", "0.470"]));
    assert!((f(&v["alpha_deg"]) - 55.58).abs() < 0.02);
    assert!((f(&v["beta_deg"]) - 72.13).abs() < 0.02);
    assert_eq!(run(&["hardy", "angles", "--epsilon", "1"]).status.code(), Some(4));
}

#[test]
fn hardy_test_on_fixture() {
    let v = json(&run(&["hardy", "test", fixture(HARDY_FILE).to_str().unwrap()]));
    assert!((f(&v["sigma"]) - 122.0).abs() < 1.0);
    assert_eq!(v["violates_local_realism"], true);
}

#[test]
fn hardy_curve_shape_and_determinism() {
    let args = [
        "hardy", "curve", "--from", "0.05", "--to", "0.95", "--steps", "19", "--seed", "3",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 20);
    assert!(text.starts_with("epsilon,predicted,band_lo,band_hi,sim_pbb,sim_sigma"));
    assert_eq!(run(&args).stdout, a.stdout);
}

#[test]
fn repro_reports_every_criterion() {
    let o = run(&["repro", "--seed", "1"]);
    let text = stdout(&o);
    assert!(text.contains("seed 1") && text.contains(env!("CARGO_PKG_VERSION")));
    for id in 1..=8 {
        assert!(text.contains(&format!("] {id}. ")), "missing check {id}:\n{text}");
    }
    // the coherence bound on the fixture state is not met by the data
    assert_eq!(o.status.code(), Some(1));
    assert!(text.contains("[FAIL] 1."));
    assert_eq!(text.matches("[PASS]").count(), 7);
}

#[test]
fn repro_with_corrupted_fixture_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture(TABLE1_FILE), dir.path().join(TABLE1_FILE)).unwrap();
    fs::write(dir.path().join(HARDY_FILE), "{ not json").unwrap();
    let o = bin()
        .env(FIXTURE_ENV, dir.path())
        .args(["repro", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let hardy = &v["checks"][1];
    assert_eq!(hardy["id"], 2);
    assert_eq!(hardy["passed"], false);
    assert!(hardy["detail"].as_str().unwrap().contains(HARDY_FILE));
}

#[test]
fn missing_fixture_dir_is_reported_with_path() {
    let o = bin()
        .env(FIXTURE_ENV, "/no/such/dir")
        .args(["hardy", "test"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(6));
    assert!(stderr(&o).contains("/no/such/dir"));
}
