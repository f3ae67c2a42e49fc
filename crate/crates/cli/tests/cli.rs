//! End-to-end runs of the `qch` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qch")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn max_residual(check: &Value) -> f64 {
    check["residuals"].as_array().unwrap().iter().map(|r| r.as_f64().unwrap()).fold(0.0, f64::max)
}

#[test]
fn verify_flat_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.json");
    let out = qch(&["verify", "--family", "flat", "--n", "3", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&path);
    let checks = rep["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        for key in ["name", "paper_ref", "points", "residuals", "tolerance", "verdict"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        assert_eq!(c["verdict"], "pass");
        assert!(max_residual(c) < 1e-8, "{}: {}", c["name"], max_residual(c));
    }
    assert_eq!(rep["summary"]["all_passed"], true);
}

#[test]
fn verify_fubini_study_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = qch(&["verify", "--family", "potential", "--f", "log1p", "--n", "3", "--seed", "7", "--json", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    qch(&["verify", "--family", "potential", "--seed", "8", "--json", c.to_str().unwrap()]);
    assert_ne!(report(&a)["checks"][0]["points"], report(&c)["checks"][0]["points"]);
}

#[test]
fn verify_rotational_coefficient_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rot.json");
    let out = qch(&["verify", "--family", "rotational", "--profile", "sin", "--check", "rotational-coefficients", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rep = report(&path);
    let check = &rep["checks"][0];
    assert_eq!(check["name"], "rotational-coefficients");
    let n = check["points"].as_array().unwrap().len();
    for key in ["s", "a", "b", "c", "a_numeric", "b_numeric", "c_numeric"] {
        assert_eq!(check["extra"][key].as_array().unwrap().len(), n);
    }
    // a = 4(1 - cos s)/sin² s
    for (s, a) in check["extra"]["s"].as_array().unwrap().iter().zip(check["extra"]["a"].as_array().unwrap()) {
        let s = s.as_f64().unwrap();
        assert!((a.as_f64().unwrap() - 4.0 * (1.0 - s.cos()) / s.sin().powi(2)).abs() < 1e-12);
    }
}

#[test]
fn transform_reports_invariants_and_composition() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = qch(&["transform", "--family", "flat", "--v", "logpoly:1,0", "--then-v", "logpoly:0.3,0.1", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rep = report(&path);
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["qc_invariance", "ricci_deviation_invariance", "a_plus_k2_scaling", "composition"]);
    assert!(max_residual(&rep["checks"][2]) < 1e-5);
    assert!(max_residual(&rep["checks"][3]) < 1e-8);
    // flat source: k = 2/r, a = 0, so a + k² = 4/r²
    let scaling = &rep["checks"][2];
    for (p, s) in scaling["points"].as_array().unwrap().iter().zip(scaling["extra"]["a_plus_k2"].as_array().unwrap()) {
        let r2: f64 = p.as_array().unwrap().iter().map(|x| x.as_f64().unwrap().powi(2)).sum();
        assert!((s.as_f64().unwrap() - 4.0 / r2).abs() < 1e-8);
    }
}

#[test]
fn transform_rejects_constant_v() {
    let out = qch(&["transform", "--family", "flat", "--v", "zero"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dv must be nonzero"));
}

#[test]
fn flatten_fubini_study() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let out = qch(&["flatten", "--family", "potential", "--f", "log1p", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(max_residual(&report(&path)["checks"][0]) < 1e-4);
    assert_eq!(code(&qch(&["flatten", "--family", "flat"])), 3);
}

#[test]
fn meridian_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let out = qch(&["meridian", "--a", "1", "--samples", "100", "--csv", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y");
    assert_eq!(lines.len(), 101);
    let rows: Vec<(f64, f64)> = lines[1..]
        .iter()
        .map(|l| {
            let (x, y) = l.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    // √(8 - x²) + ln((√(8 - x²) - 2)/(√(8 - x²) + 2)) at a = 1
    for (x, y) in &rows {
        let w = (8.0 - x * x).sqrt();
        assert!((y - (w + ((w - 2.0) / (w + 2.0)).ln())).abs() < 1e-13 * y.abs().max(1.0));
    }
    // 15 significant digits
    let mantissa = lines[1].split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 15);
}

#[test]
fn meridian_domain_and_errors() {
    let out = qch(&["meridian", "--a", "4", "--samples", "20"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for l in text.lines().skip(1) {
        let x: f64 = l.split(',').next().unwrap().parse().unwrap();
        assert!(x > 0.0 && x < 1.0);
    }
    assert_eq!(code(&qch(&["meridian", "--a", "-1"])), 3);
    assert_eq!(code(&qch(&["meridian", "--a", "0"])), 3);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("m.csv");
    assert_eq!(code(&qch(&["meridian", "--a", "1", "--csv", bad.to_str().unwrap()])), 4);
    let bad = dir.path().join("missing").join("m.json");
    assert_eq!(code(&qch(&["verify", "--json", bad.to_str().unwrap()])), 4);
}

#[test]
fn rotational_subcommand_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = qch(&["rotational", "--profile", "ramp", "--points", "5", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "s,t,a,b,c,alpha,beta");
    assert_eq!(text.lines().count(), 6);
    for l in text.lines().skip(1) {
        let a: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(a >= 0.0);
    }
}

#[test]
fn malformed_configuration() {
    for args in [
        &["verify", "--family", "bogus"][..],
        &["verify", "--tol", "qch"],
        &["verify", "--tol", "qch=abc"],
        &["verify", "--tol", "nope=1"],
        &["verify", "--tol", "qch=-1"],
        &["verify", "--check", "nope"],
        &["verify", "--family", "potential", "--f", "nope"],
        &["verify", "--family", "rotational", "--profile", "nope"],
        &["verify", "--n", "0"],
        &["verify", "--points", "0"],
        &["verify", "--n", "abc"],
        &["transform", "--v", "logpoly:1"],
        &["frobnicate"],
    ] {
        let out = qch(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn domain_errors() {
    assert_eq!(code(&qch(&["verify", "--family", "rotational", "--profile", "constant-holomorphic", "--a", "-1"])), 3);
    assert_eq!(code(&qch(&["verify", "--family", "potential", "--f", "polynomial:0,-1"])), 3);
}

#[test]
fn tightened_tolerance_fails_with_exit_one() {
    let out = qch(&["verify", "--family", "potential", "--check", "b0", "--tol", "b0=1e-300"]);
    assert_eq!(code(&out), 1);
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["checks"][0]["verdict"], "fail");
    assert_eq!(rep["summary"]["all_passed"], false);
}

#[test]
fn low_dimension_integrability_is_out_of_range_not_failure() {
    let out = qch(&["verify", "--family", "potential", "--n", "2", "--check", "integrability"]);
    assert_eq!(code(&out), 0);
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["checks"][0]["verdict"], "out_of_range");
}
