use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn loewner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loewner")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const PAIR: &str = r#"{"slits":[{"vertices":[[-1,0],[-1,1]]},{"vertices":[[1,0],[1,1]]}]}"#;
const V1: &str = r#"{"slits":[{"vertices":[[0,0],[0,1]]}]}"#;

#[test]
fn fit_symmetric_pair_gives_equal_weights() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.json", PAIR);
    let out = loewner(&["fit", input.to_str().unwrap(), "--levels", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda: Vec<f64> = v["lambda"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(lambda.len(), 2);
    assert!((lambda[0] - 0.5).abs() < 2e-3 && (lambda[1] - 0.5).abs() < 2e-3, "{lambda:?}");
    assert_eq!(v["U"].as_array().unwrap().len(), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
}

#[test]
fn drive_vertical_slit_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "v1.json", V1);
    let csv = dir.path().join("u.csv");
    let out = loewner(&["drive", input.to_str().unwrap(), "--grid", "64", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,U1"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (t, u) = l.split_once(',').unwrap();
            (t.parse().unwrap(), u.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|&(_, u)| u.abs() <= 1e-4));
    assert!((rows[63].0 - 0.25).abs() < 1e-12);
}

#[test]
fn trace_of_fitted_record_reproduces_the_slits() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.json", PAIR);
    let csv = dir.path().join("d.csv");
    let out = loewner(&["fit", input.to_str().unwrap(), "--levels", "6", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let header = std::fs::read_to_string(&csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "t,U1,U2,lambda1,lambda2");
    let out = loewner(&["trace", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let slits = v["slits"].as_array().unwrap();
    assert_eq!(slits.len(), 2);
    for (slit, x) in slits.iter().zip([-1.0, 1.0]) {
        let tip = slit["vertices"].as_array().unwrap().last().unwrap();
        let (tx, ty) = (tip[0].as_f64().unwrap(), tip[1].as_f64().unwrap());
        assert!((tx - x).abs() < 1e-2 && (ty - 1.0).abs() < 1e-2, "{tx} {ty}");
    }
}

#[test]
fn hcap_reports_chain_and_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "v1.json", V1);
    let out = loewner(&["hcap", input.to_str().unwrap(), "--mc-samples", "4000", "--seed", "7"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["chain"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    let mc = &v["montecarlo"];
    let dev = (mc["value"].as_f64().unwrap() - 0.5).abs();
    assert!(dev < 5.0 * mc["stderr"].as_f64().unwrap(), "{mc}");
}

#[test]
fn verify_passes_on_bundled_fixtures() {
    let out = loewner(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == Value::Bool(true)));
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.json", PAIR);
    let p = input.to_str().unwrap();
    for bad in [["--tol", "-1"], ["--tol", "0"], ["--grid", "8"], ["--levels", "13"]] {
        assert_eq!(loewner(&["fit", p, bad[0], bad[1]]).status.code(), Some(2), "{bad:?}");
    }
    let crossing = write(dir.path(), "bad.json", r#"{"slits":[{"vertices":[[0,0],[0,1]]},{"vertices":[[0,0],[1,1]]}]}"#);
    assert_eq!(loewner(&["hcap", crossing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(loewner(&["drive", p]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(loewner(&["hcap", missing.to_str().unwrap()]).status.code(), Some(1));
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(loewner(&["hcap", garbage.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(loewner(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(loewner(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pair.json", PAIR);
    let p = input.to_str().unwrap();
    for args in [
        vec!["fit", p, "--levels", "4", "--grid", "129"],
        vec!["hcap", p, "--mc-samples", "1000", "--seed", "11"],
    ] {
        let a = loewner(&args);
        let b = loewner(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
    let threads = loewner(&["hcap", p, "--mc-samples", "1000", "--seed", "11", "--threads", "1"]);
    assert_eq!(threads.stdout, loewner(&["hcap", p, "--mc-samples", "1000", "--seed", "11"]).stdout);
}
