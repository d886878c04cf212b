use std::fs;
use std::process::{Command, Output};

fn qwsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwsr")).args(args).output().expect("running qwsr")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn printed_default_scenario_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.toml");
    fs::write(&path, stdout(&qwsr(&["validate"]))).unwrap();
    let text = stdout(&qwsr(&["validate", "--scenario", path.to_str().unwrap()]));
    assert!(text.contains("valid (2 users, N=4, M=20"), "{text}");
}

#[test]
fn solve_reports_objective_and_trace() {
    let text = stdout(&qwsr(&["solve", "--policy", "TS", "--seed", "3"]));
    assert!(text.starts_with("TS seed 3"), "{text}");
    assert!(text.contains("QWSR") && text.contains("trace"), "{text}");
}

#[test]
fn simulate_writes_identical_records_for_equal_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        stdout(&qwsr(&["simulate", "--policy", "TS", "--seed", "1", "--slots", "3", "--out", out.to_str().unwrap()]));
        for f in ["records.csv", "summary.csv", "meta.json", "timing.csv"] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        fs::read_to_string(out.join("records.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a.lines().count(), 4);
    assert_eq!(a, run("b"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!qwsr(&["simulate", "--fading", "rayleigh"]).status.success());
    assert!(!qwsr(&["sweep", "--axis", "bandwidth"]).status.success());
    assert!(!qwsr(&["validate", "--scenario", "/nonexistent.toml"]).status.success());
}
