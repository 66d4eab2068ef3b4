//! End-to-end checks of the command-line surface: exit codes, JSON shapes,
//! and the soliton round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn catalog_lists_known_keys() {
    let out = run(&["catalog"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    for key in ["k1", "k2", "kNa", "disk-poly", "const"] {
        assert!(text.contains(key), "catalog missing {key}");
    }
}

#[test]
fn extend_point_evaluation() {
    let out = run(&["extend", "--profile", "k1", "--at", "0,1"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.contains("Gamma(0, 1) = 1.000000000000"), "got: {text}");
    assert!(text.contains("grad Gamma"));
}

#[test]
fn extend_asymptotic_report() {
    let out = run(&["extend", "--profile", "k1", "--asymptotic", "--xi", "0"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let slope = v["slope"].as_f64().unwrap();
    assert!(slope >= 1.8, "slope {slope}");
}

#[test]
fn unknown_profile_is_a_validation_failure() {
    let out = run(&["extend", "--profile", "nope", "--at", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eps_too_large_is_a_numerical_failure() {
    let out = run(&[
        "solve", "--profile", "k1", "--eps", "0.5", "--seed-point", "0,1", "--grid-n", "400",
        "--xmax", "1000",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degree_json_for_kna() {
    let out = run(&["degree", "--profile", "kNa:N=3,a=0.5", "--R", "26"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["report"]["degree"].as_i64(), Some(-3));
    assert_eq!(v["report"]["critical_points"].as_array().unwrap().len(), 3);
    assert_eq!(v["report"]["verdict"].as_bool(), Some(true));
    assert_eq!(v["exact_count"].as_str(), Some("Pass"));
    assert_eq!(v["config"]["profile"].as_str(), Some("kNa:N=3,a=0.5"));
}

#[test]
fn degree_json_for_supercritical_kna() {
    let out = run(&["degree", "--profile", "kNa:N=3,a=1.5", "--R", "8"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["report"]["degree"].as_i64(), Some(0));
    assert_eq!(v["report"]["critical_points"].as_array().unwrap().len(), 0);
}

#[test]
fn solve_and_soliton_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "solve", "--profile", "k1", "--eps", "1e-3", "--seed-point", "0,1", "--grid-n", "800",
        "--xmax", "10000", "--out", out_dir,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_str(&out).contains("certified = true"));
    let report_path = Path::new(out_dir).join("solve_0.json");
    assert!(report_path.exists());
    let csv = std::fs::read_to_string(Path::new(out_dir).join("solve_0.csv")).unwrap();
    assert!(csv.starts_with("x,phi,u,residual\n"));
    // 17 significant digits in the dumps
    let second_line = csv.lines().nth(1).unwrap();
    let first_field = second_line.split(',').next().unwrap();
    assert!(first_field.contains('.') && first_field.split('.').nth(1).unwrap().len() >= 16);

    // soliton from the report, twice: identical identity residuals
    let arg = report_path.to_str().unwrap();
    let a = run(&["soliton", "--from", arg, "--out", out_dir]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["soliton", "--from", arg]);
    let va: serde_json::Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    let vb: serde_json::Value = serde_json::from_str(&stdout_str(&b)).unwrap();
    assert_eq!(va["identities"], vb["identities"], "round trip must be bit-identical");
    let lam = va["lambda"].as_f64().unwrap();
    assert!((lam - 2.0 * std::f64::consts::PI).abs() < 1e-5);
    let soliton_csv = std::fs::read_to_string(Path::new(out_dir).join("soliton.csv")).unwrap();
    assert!(soliton_csv.starts_with("x,psi,V\n"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "profile=k1\nxi=0\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "extend", "--at", "0,1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_str(&out).contains("Gamma(0, 1)"));
    // flag overrides the config value
    let out = run(&["--config", cfg.to_str().unwrap(), "extend", "--profile", "const:2", "--at", "3,4"]);
    assert!(out.status.success());
    assert!(stdout_str(&out).contains("= 2.000000000000"));
}
