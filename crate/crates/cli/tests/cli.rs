use std::path::Path;
use std::process::{Command, Output};

use hfbgeo::g1pdm::{diagonalize, random_g1pdm, Diagonalization};

fn hfbgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfbgeo")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn version_line() -> String {
    format!("# hfbgeo {}", env!("CARGO_PKG_VERSION"))
}

#[test]
fn csv_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["section-test", "--spec", "0.4,0", "--n", "4", "--trials", "40", "--seed", "7"];
    let a = hfbgeo(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_hfbgeo")).args(args).env("HFBGEO_THREADS", "1").output().unwrap();
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with(&version_line()));
    assert_eq!(lines.next().unwrap(), "trial,seed,distance,inside_radius,section_residual,independence_residual,error");
    assert_eq!(lines.count(), 40);
}

#[test]
fn different_seed_changes_output() {
    let a = hfbgeo(&["orbit-check", "--n", "3", "--trials", "5", "--seed", "1"]);
    let b = hfbgeo(&["orbit-check", "--n", "3", "--trials", "5", "--seed", "2"]);
    assert_eq!(code(&a), 0);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn diagonalize_round_trip_through_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.json");
    let out = dir.path().join("d.json");
    let g = random_g1pdm(11, 3, &[0.45, 0.2, 0.0]).unwrap();
    std::fs::write(&input, serde_json::to_string(&g).unwrap()).unwrap();
    let o = hfbgeo(&["diagonalize", "--in", input.to_str().unwrap(), "--tol", "1e-10", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["version"], format!("hfbgeo {}", env!("CARGO_PKG_VERSION")));
    let d: Diagonalization = serde_json::from_value(value).unwrap();
    let direct = diagonalize(&g, 1e-10).unwrap();
    assert_eq!(d.lambda, direct.lambda);
    assert!(d.residual < 1e-9);
    let mut sorted = d.lambda.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for (x, y) in sorted.iter().zip([0.45, 0.2, 0.0]) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn malformed_json_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.json");
    std::fs::write(&input, "{\"gamma\": [1, 2").unwrap();
    let o = hfbgeo(&["diagonalize", "--in", input.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("malformed JSON"));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\"n\": ").unwrap();
    let o = hfbgeo(&["cocycle-test", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn invalid_g1pdm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.json");
    std::fs::write(&input, r#"{"gamma": {"n": 1, "re": [2.0], "im": [0.0]}, "alpha": {"n": 1, "re": [0.0], "im": [0.0]}}"#)
        .unwrap();
    let o = hfbgeo(&["diagonalize", "--in", input.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn cocycle_test_passes() {
    let o = hfbgeo(&["cocycle-test", "--n", "4", "--trials", "1000", "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let header: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let k = header.iter().position(|c| *c == "jacobi_gamma").unwrap();
    let worst = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(k).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10);
}

#[test]
fn zero_trials_reports_no_trials() {
    let o = hfbgeo(&["cocycle-test", "--trials", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no trials"));
    let o = hfbgeo(&["suite", "--trials", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(code(&hfbgeo(&["section-test", "--spec", "0.7,0"])), 2);
    assert_eq!(code(&hfbgeo(&["section-test", "--n", "0"])), 2);
    assert_eq!(code(&hfbgeo(&["section-test", "--bogus"])), 2);
    assert_eq!(code(&hfbgeo(&["hfb-minimize", "--L", "4"])), 2);
    assert_eq!(code(&hfbgeo(&["hfb-minimize", "--convention", "spinful"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_hfbgeo"))
        .args(["geodesic", "--points", "2"])
        .env("HFBGEO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 3, "spec": [0.3, 0.1], "trials": 4, "seed": 5}"#).unwrap();
    let o = hfbgeo(&["cocycle-test", "--config", cfg.to_str().unwrap(), "--trials", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().ends_with("cocycle-test n=3 spec=0.3;0.3;0.1 trials=2 seed=5"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn hfb_minimize_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = hfbgeo(&["hfb-minimize", "--L", "2", "--t", "1", "--U", "4", "--mu", "0", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&out)).unwrap()).unwrap();
    let r = &v["result"];
    let gap = r["gap"].as_f64().unwrap();
    let e = r["energy"].as_f64().unwrap();
    let e_gs = r["ground_energy"].as_f64().unwrap();
    assert!(gap >= -1e-8);
    assert!((e - e_gs - gap).abs() < 1e-12);
    assert!(r["gamma_star"]["gamma"]["re"].is_array());
}

#[test]
fn constants_for_a_two_level_spectrum() {
    let o = hfbgeo(&["constants", "--spec", "0.4,0", "--n", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["restricted_bound"].as_f64().unwrap() - 3.0 / 28.0).abs() < 1e-15);
    assert!((v["operator_bound"].as_f64().unwrap() - 3.0 / 86.0).abs() < 1e-15);
}

#[test]
fn radical_and_geodesic_pass() {
    let o = hfbgeo(&["radical-test", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = hfbgeo(&["geodesic", "--n", "3", "--points", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn suite_writes_summary_table() {
    let o = hfbgeo(&["suite", "--trials", "5", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("{} suite trials=5 seed=4", version_line()));
    assert_eq!(lines.next().unwrap(), "check,trials,max_residual,tolerance,passed,worst_seed");
    assert!(lines.all(|l| l.contains(",pass,")));
    assert!(stderr(&o).contains("checks passed"));
}
