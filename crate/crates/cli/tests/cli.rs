use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn sample(name: &str) -> String {
    samples().join(name).to_string_lossy().into_owned()
}

fn rqc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqc")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--format", "json"];
    all.extend_from_slice(args);
    let out = rqc(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn lcc_reports() {
    let r = json(&["lcc", &sample("u2.json")]);
    assert!((r["success_probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(r["residual"].as_f64().unwrap() < 1e-10);
    let r = json(&["lcc", &sample("identity.json")]);
    assert!(r["residual"].as_f64().unwrap() < 1e-15);
}

#[test]
fn lcc_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rqc(&["lcc", &write(&dir, "bad.json", "{ not json")])), 2);
    assert_eq!(code(&rqc(&["lcc", "/nonexistent/spec.json"])), 2);
    let unnormalized = r#"{"coefficients": [[1, 0], [1, 0]], "gates": ["I", "X"]}"#;
    assert_eq!(code(&rqc(&["lcc", &write(&dir, "u.json", unnormalized)])), 3);
    let mixed = r#"{"coefficients": [[1, 0], [0, 0]], "gates": ["I", "CNOT"]}"#;
    assert_eq!(code(&rqc(&["lcc", &write(&dir, "m.json", mixed)])), 4);
    let unknown = r#"{"coefficients": [[1, 0], [0, 0]], "gates": ["I", "Q"]}"#;
    assert_eq!(code(&rqc(&["lcc", &write(&dir, "n.json", unknown)])), 5);
}

#[test]
fn kak_reports() {
    let r = json(&["kak", &sample("cnot.txt")]);
    assert!(r["residual"].as_f64().unwrap() < 1e-9);
    let mags: Vec<f64> = r["alpha"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z[0].as_f64().unwrap().hypot(z[1].as_f64().unwrap()))
        .collect();
    assert_eq!(mags.iter().filter(|m| (*m - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10).count(), 2);

    let dir = tempfile::tempdir().unwrap();
    let eye = write(&dir, "i4.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
    let r = json(&["kak", &eye]);
    for k in r["k"].as_array().unwrap() {
        assert!(k.as_f64().unwrap().abs() < 1e-12);
    }

    let r = json(&["--seed", "4", "kak", "--random", "5"]);
    assert_eq!(r["residuals"].as_array().unwrap().len(), 5);
    assert!(r["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn kak_errors() {
    let dir = tempfile::tempdir().unwrap();
    let doubled = write(&dir, "d.txt", "2 0 0 0\n0 2 0 0\n0 0 2 0\n0 0 0 2\n");
    assert_eq!(code(&rqc(&["kak", &doubled])), 3);
    assert_eq!(code(&rqc(&["kak", &write(&dir, "s.txt", "1 0\n0 1\n")])), 4);
    assert_eq!(code(&rqc(&["kak", &write(&dir, "p.txt", "1 0 x\n")])), 2);
    assert_eq!(code(&rqc(&["kak", "--random", "3"])), 2);
}

#[test]
fn protocol_reports() {
    let r = json(&["protocol", &sample("honest.json")]);
    assert!((r["p_compute"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(r["verify_failures"].as_u64().unwrap(), 0);
    assert!((r["min_compute_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.jsonl");
    let r = json(&["protocol", &sample("intercept.json"), "--out", out.to_str().unwrap()]);
    let curve = r["detection_curve"].as_array().unwrap();
    assert!(!curve.is_empty());
    assert!(curve[0].get("analytic_undetected").is_some());
    let transcript = std::fs::read_to_string(&out).unwrap();
    assert_eq!(transcript.lines().count(), 501);
    assert!(transcript.lines().last().unwrap().starts_with("{\"summary\""));
}

#[test]
fn protocol_errors() {
    let dir = tempfile::tempdir().unwrap();
    let wide_input = r#"{"gate": "U2", "rounds": 3, "seed": 1, "input_state": [[1,0],[0,0],[0,0],[0,0]]}"#;
    assert_eq!(code(&rqc(&["protocol", &write(&dir, "w.json", wide_input)])), 4);
    let unseeded = r#"{"gate": "U2", "rounds": 3}"#;
    assert_eq!(code(&rqc(&["protocol", &write(&dir, "s.json", unseeded)])), 2);
    let bad_tau = r#"{"gate": "U2", "rounds": 3, "seed": 1, "tau": 0}"#;
    assert_eq!(code(&rqc(&["protocol", &write(&dir, "t.json", bad_tau)])), 3);
    let unknown = r#"{"gate": "U99", "rounds": 3, "seed": 1}"#;
    assert_eq!(code(&rqc(&["protocol", &write(&dir, "u.json", unknown)])), 5);
}

#[test]
fn tomography_tables() {
    let clean = json(&["tomography", &sample("ops.txt")]);
    let noisy = json(&["--seed", "3", "tomography", &sample("ops.txt"), "--sampled", "--depolarizing", "0.05", "--resamples", "3"]);
    for (c, n) in clean.as_array().unwrap().iter().zip(noisy.as_array().unwrap()) {
        let (fc, fn_) = (c["fidelity"].as_f64().unwrap(), n["fidelity"].as_f64().unwrap());
        assert!(fc >= 0.999, "{c}");
        assert!(fn_ < fc, "{n}");
        assert!(n["std"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn tomography_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rqc(&["tomography", &write(&dir, "e.txt", "# nothing\n")])), 5);
    assert_eq!(code(&rqc(&["tomography", &write(&dir, "u.txt", "U1\nU13\n")])), 5);
    assert_eq!(code(&rqc(&["tomography", "--sampled"])), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |i: usize| {
        let out = dir.path().join(format!("t{i}.jsonl"));
        let o = rqc(&["--seed", "21", "protocol", &sample("honest.json"), "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        (std::fs::read(&out).unwrap(), o.stdout)
    };
    assert_eq!(run(0), run(1));
}
