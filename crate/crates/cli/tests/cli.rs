use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semicross"))
}

fn run(args: &[&str]) -> (Output, Value) {
    let out = bin()
        .args(args)
        .arg("--json")
        .output()
        .expect("binary runs");
    let v = serde_json::from_slice(&out.stdout).expect("JSON report on stdout");
    (out, v)
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PHI: &str = r#"{"n": 2,
  "unitary": [[[0.6, 0.8], [0, 0]], [[0, 0], [0, 1]]],
  "center": [[0.2, 0.1], [-0.3, 0]]}"#;

#[test]
fn verify_all_passes() {
    let (out, v) = run(&["verify", "--suite", "all", "--seed", "42"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert_eq!(v["status"], "pass");
    assert_eq!(v["result"]["pass"], true);
    assert_eq!(v["result"]["suites"].as_array().unwrap().len(), 5);
}

#[test]
fn decide_phi_with_itself() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.json", PHI);
    let (out, v) = run(&["sc", "decide", s(&phi), s(&phi)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["result"]["verdict"], "Isomorphic");
    assert_eq!(v["command"], "sc decide");
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn malformed_unitary_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n": 2, "unitary": [[[1,0],[0.5,0]],[[0,0],[1,0]]], "center": [[0,0],[0,0]]}"#,
    );
    let (out, v) = run(&["aut", "show", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["pointer"], "/unitary");
    assert!(v["error"]["message"]
        .as_str()
        .unwrap()
        .contains("not unitary"));
}

#[test]
fn schema_errors_carry_pointers() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        dir.path(),
        "sep.json",
        r#"{"poly": {"n": 2, "terms": [{"word": [1, 3], "coeff": [1, 0]}]}}"#,
    );
    let (out, v) = run(&["rep", "separate", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(v["error"]["pointer"]
        .as_str()
        .unwrap()
        .starts_with("/poly/terms/0"));
    let garbage = write(dir.path(), "g.json", "{not json");
    let (out, _) = run(&["aut", "show", s(&garbage)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn asserting_conjugacy_of_different_rotations_fails() {
    let dir = TempDir::new().unwrap();
    let a = write(
        dir.path(),
        "a.json",
        r#"{"n": 2, "unitary": [[[0,1],[0,0]],[[0,0],[1,0]]], "center": [[0,0],[0,0]]}"#,
    );
    let b = write(
        dir.path(),
        "b.json",
        r#"{"n": 2, "unitary": [[[-1,0],[0,0]],[[0,0],[1,0]]], "center": [[0,0],[0,0]]}"#,
    );
    let (out, v) = run(&["aut", "conjugate", s(&a), s(&b), "--assert"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(v["result"]["verdict"], "NotConjugate");
    let (out, _) = run(&["aut", "conjugate", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reports_are_byte_stable() {
    let dir = TempDir::new().unwrap();
    let sep = write(
        dir.path(),
        "sep.json",
        r#"{"poly": {"n": 2, "terms": [{"word": [1, 2], "coeff": [1, 0]}, {"word": [2, 1], "coeff": [-1, 0]}]}}"#,
    );
    for args in [
        vec!["rep", "separate", s(&sep), "--seed", "9"],
        vec![
            "verify",
            "--suite",
            "semicrossed",
            "--seed",
            "3",
            "--cases",
            "10",
        ],
        vec![
            "aut",
            "random",
            "--n",
            "3",
            "--type",
            "hyperbolic",
            "--seed",
            "11",
        ],
    ] {
        let a = bin().args(&args).output().unwrap();
        let b = bin().args(&args).output().unwrap();
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn random_automorphism_round_trips_through_show() {
    let dir = TempDir::new().unwrap();
    let (out, v) = run(&[
        "aut",
        "random",
        "--n",
        "3",
        "--type",
        "parabolic",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let phi = write(dir.path(), "phi.json", &v["result"].to_string());
    let (out, shown) = run(&["aut", "show", s(&phi)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(shown["result"]["automorphism"], v["result"]);
    assert_eq!(shown["result"]["type"], "parabolic");
}

#[test]
fn fix_and_orbit_record_tolerances() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.json", PHI);
    let (out, v) = run(&["aut", "fix", s(&phi)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["status"], "pass");
    assert_eq!(v["tolerances"]["fixed_residual"], 1e-9);
    let orbit = write(
        dir.path(),
        "orbit.json",
        &format!(r#"{{"phi": {PHI}, "z": [[0.3, 0], [0, 0.1]], "blocks": 6}}"#),
    );
    let (out, v) = run(&["sc", "orbit", s(&orbit)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(v["result"]["covariance_residual"], 0.0);
}

#[test]
fn corner_and_surjectivity() {
    let dir = TempDir::new().unwrap();
    let rho = write(
        dir.path(),
        "rho.json",
        r#"{"points": [[[0.1,0],[0.2,0]], [[-0.1,0.05],[0.3,0]], [[0.2,0],[-0.15,0.1]]],
            "word": [1,2], "delta": 0.6, "v": [1,2]}"#,
    );
    let (_, v) = run(&["rep", "corner", s(&rho)]);
    let value = v["result"]["value"][0].as_f64().unwrap();
    assert!((value - 0.16).abs() < 1e-15);
    let (_, v) = run(&["rep", "surjective", s(&rho)]);
    assert_eq!(v["result"]["dimension"], 6);
}

#[test]
fn stdin_input_and_prose_on_stderr() {
    use std::io::Write;
    let mut child = bin()
        .args(["aut", "classify", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(PHI.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["type"], "elliptic");
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim(), "elliptic");
}

#[test]
fn ds_commands() {
    let dir = TempDir::new().unwrap();
    let eval = write(
        dir.path(),
        "e.json",
        r#"{"poly": {"d": 2, "terms": [{"alpha": [1, 1], "coeff": [1, 0]}]},
            "pair": {"x": [[0.1, 0], [0.2, 0]], "y": [[-0.3, 0], [0.1, 0]], "t": [0.5, 0]}}"#,
    );
    let (out, v) = run(&["ds", "eval", s(&eval)]);
    assert_eq!(out.status.code(), Some(0));
    // f(x) = 0.02, f(y) = -0.03, off-diagonal 0.5 * 0.05
    let m = &v["result"]["matrix"];
    assert!((m[0][0][0].as_f64().unwrap() - 0.02).abs() < 1e-15);
    assert!((m[0][1][0].as_f64().unwrap() - 0.025).abs() < 1e-15);
    assert!((m[1][1][0].as_f64().unwrap() + 0.03).abs() < 1e-15);
    let (_, v) = run(&["ds", "symfock", "--d", "2", "--level", "3"]);
    assert_eq!(v["result"]["basis"].as_array().unwrap().len(), 10);
}
