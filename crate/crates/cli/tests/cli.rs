use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn katok(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katok")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn verify_psi_at_zero_field_passes_tight_gates() {
    let o = katok(&["verify-psi", "--s", "0", "--tol", "1e-10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# katok verify-psi\n"));
    assert!(out.contains("# gate: conjugacy_defect < 1e-10"));
}

#[test]
fn failing_gate_exits_one_with_summary() {
    let o = katok(&["verify-psi", "--tol", "1e-30", "--seeds", "8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL lambda_pullback_defect"));
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[system]\ns = 1.0\nk = \"large\"\n").unwrap();
    let o = katok(&["katok-verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("field `k`"), "{err}");

    fs::write(&path, "[numeric]\nseeds = 16\n\nk = -1.0\n").unwrap();
    let o = katok(&["katok-verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    fs::write(&path, "[system\n").unwrap();
    let o = katok(&["katok-verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_two() {
    let o = katok(&["converge", "--N", "zero"]);
    assert_eq!(o.status.code(), Some(2));
    let o = katok(&["converge", "--k", "2.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "command = \"simulate\"\n[system]\nsystem = \"katok\"\n[numeric]\nt_end = 5.0\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = katok(&["run", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!x.is_empty());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.contains("t,theta,phi,p_theta,p_phi,chart,energy"));
    assert!(text.contains("system=\"katok\""));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[system]\ns = 3.0\n").unwrap();
    let o = katok(&["converge", "--config", cfg.to_str().unwrap(), "--s", "0.5", "--N", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("# parameters: s=0.5 N=12"));
}

#[test]
fn converge_ratio_tends_to_one() {
    let o = katok(&["converge", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 16);
    let ratio: f64 = rows[15][5].as_str().unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 1e-3);
}

#[test]
fn orbits_finds_the_two_axis_orbits() {
    let o = katok(&["orbits", "--seeds", "32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let orbits = v["orbits"].as_array().unwrap();
    assert_eq!(orbits.len(), 2);
    let alpha = v["system"]["alpha"].as_f64().unwrap();
    let mut conj: Vec<f64> = orbits.iter().map(|o| o["conjugate_period"].as_f64().unwrap()).collect();
    conj.sort_by(f64::total_cmp);
    let tau = std::f64::consts::TAU;
    assert!((conj[0] - tau / (1.0 + alpha)).abs() < 1e-8);
    assert!((conj[1] - tau / (1.0 - alpha)).abs() < 1e-8);
    assert_eq!(v["totally_periodic"], Value::Bool(false));
}

#[test]
fn remaining_suites_pass_with_defaults() {
    for cmd in ["katok-verify", "ellipsoid", "w-family"] {
        let o = katok(&[cmd]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
    }
}
