use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tangle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

const GHZ: &str = r#"{"dims":[2,2,2],"amps":[[0.7071067811865476,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0.7071067811865476,0]]}"#;
const W4: &str = r#"{"dims":[2,2,2,2],"amps":[[0,0],[0.5,0],[0.5,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0.5,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}"#;

#[test]
fn ghz_tanglemeter() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "ghz.json", GHZ);
    let v = stdout_json(&tangle(&["tanglemeter", path.to_str().unwrap()]));
    assert_eq!(v["beta"], serde_json::json!({"7": [1.0, 0.0]}));
    assert_eq!(v["group"], "su");
}

#[test]
fn sample_figpoly_is_deterministic() {
    let a = tangle(&["sample-figpoly", "--n", "100", "--seed", "7"]);
    let b = tangle(&["--jobs", "3", "sample-figpoly", "--n", "100", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    assert!(lines.iter().all(|l| l.split(',').count() == 5));
}

#[test]
fn w4_classifies_as_star() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "w4.json", W4);
    let v = stdout_json(&tangle(&["classify", path.to_str().unwrap()]));
    assert_eq!(v["class"], "W");
    assert_eq!(
        v["form"],
        serde_json::json!({"5": [1.0, 0.0], "6": [1.0, 0.0], "12": [1.0, 0.0]})
    );
}

#[test]
fn graph_dot() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "ghz.json", GHZ);
    let out = tangle(&["graph", path.to_str().unwrap()]);
    assert!(out.status.success());
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("graph"), "{dot}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    // The classifier takes three or four qubits.
    let bell = write(
        &dir,
        "bell.json",
        r#"{"dims":[2,2],"amps":[[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]}"#,
    );
    let out = tangle(&["classify", bell.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());

    let bad = write(&dir, "bad.json", "{not json");
    assert_eq!(
        tangle(&["tanglemeter", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tangle(&["tanglemeter", "/nonexistent/state.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(tangle(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(tangle(&["--help"]).status.code(), Some(0));
}

#[test]
fn evolve_emits_csv() {
    let dir = TempDir::new().unwrap();
    let state = write(
        &dir,
        "s.json",
        r#"{"dims":[2,2],"amps":[[1,0],[0,0],[0,0],[0,0]]}"#,
    );
    let ham = write(
        &dir,
        "h.json",
        r#"{"family":"xy","n":2,"local":[[0.3,0,0],[0,0.2,0]],"couplings":[{"kind":"exchange","i":0,"j":1,"g":0.5}]}"#,
    );
    let out = tangle(&[
        "evolve",
        state.to_str().unwrap(),
        "--hamiltonian",
        ham.to_str().unwrap(),
        "--time",
        "0.5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,1.re,1.im,2.re,2.im,3.re,3.im");
    assert_eq!(lines.count(), 6);
}

#[test]
fn merge_groups_elements() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "ghz.json", GHZ);
    let v = stdout_json(&tangle(&[
        "merge",
        path.to_str().unwrap(),
        "--group",
        "0,1",
        "--group",
        "2",
    ]));
    assert_eq!(v["dims"], serde_json::json!([4, 2]));
}
