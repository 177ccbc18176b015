use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = r#"{
  "A": [[-0.1, 1.0], [0.0, -0.1]],
  "B": [[1.0], [1.0]],
  "C": [[1.0, 2.0]],
  "S": [[[0.0, -1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
}"#;

/// Open-loop unstable, and both null-space conditions fail.
const INFEASIBLE: &str = r#"{
  "A": [[1.0, 0.0], [0.0, 1.0]],
  "B": [[1.0], [0.0]],
  "C": [[1.0, 0.0]]
}"#;

fn sof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sof")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn check_accepts_example() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let out = sof(&["check", s(&sys)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["max_violation"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn check_reports_non_skew_term() {
    let dir = TempDir::new().unwrap();
    let body = EXAMPLE.replace("[[0.0, -1.0], [1.0, 0.0]]", "[[0.0, -1.0], [1.001, 0.0]]");
    let sys = write(&dir, "sys.json", &body);
    let out = sof(&["check", s(&sys)]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["pass"], false);
    assert_eq!(v["skew_violation_index"], 0);
}

#[test]
fn malformed_system_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", "{\n  \"A\": [[1.0, 2.0]\n");
    let out = sof(&["check", s(&broken)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "{err}");

    let ragged = write(&dir, "ragged.json", r#"{"A": [[1.0, 0.0], [0.0]], "B": [[1.0], [0.0]], "C": [[1.0, 0.0]]}"#);
    assert_eq!(code(&sof(&["feasibility", s(&ragged)])), 1);

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&sof(&["feasibility", s(&missing)])), 1);
}

#[test]
fn unknown_flag_is_usage_error_and_help_is_success() {
    assert_eq!(code(&sof(&["synth", "--bogus"])), 1);
    assert_eq!(code(&sof(&[])), 1);
    assert_eq!(code(&sof(&["--help"])), 0);
}

#[test]
fn feasibility_codes() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let out = sof(&["feasibility", s(&sys)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["lambda_B"].as_f64().unwrap() + 1.2).abs() < 1e-12);
    assert!((v["lambda_C"].as_f64().unwrap() + 1.0).abs() < 1e-12);

    let bad = write(&dir, "bad.json", INFEASIBLE);
    let out = sof(&["feasibility", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["feasible"], false);
}

#[test]
fn synth_exit_codes() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let out = sof(&["synth", s(&sys)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["status"], "Certified");
    assert!(v["achieved_lambda"].as_f64().unwrap() <= -1e-6);

    let bad = write(&dir, "bad.json", INFEASIBLE);
    let out = sof(&["synth", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["status"], "Infeasible");

    // The best achievable decay for the example is 1.
    let out = sof(&["synth", s(&sys), "--epsilon", "2", "--max-iters", "300", "--restarts", "1"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["status"], "MaxIterations");

    assert_eq!(code(&sof(&["synth", s(&sys), "--epsilon", "0"])), 1);
    assert_eq!(code(&sof(&["synth", s(&sys), "--epsilon", "-1"])), 1);
}

#[test]
fn synth_maximize_rate_finds_best_decay() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let out = sof(&["synth", s(&sys), "--maximize-rate"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let k = v["K"][0][0].as_f64().unwrap();
    assert!((k + 0.6).abs() < 1e-3, "{k}");
    assert!((v["achieved_lambda"].as_f64().unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn synth_report_round_trips_into_certify() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let report = dir.path().join("k.json");
    assert_eq!(code(&sof(&["synth", s(&sys), "--out", s(&report)])), 0);
    let out = sof(&["certify", s(&sys), s(&report)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["valid"], true);
}

#[test]
fn certify_codes() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let reference = write(&dir, "ref.json", r#"{"K": -3.6231}"#);
    let out = sof(&["certify", s(&sys), s(&reference)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["lambda_max_reduced"].as_f64().unwrap() + 0.5559781605).abs() < 1e-8);
    assert_eq!(v["xi_o"].as_f64().unwrap(), -1.0);

    // K = 0: M = [[-0.2, 1], [1, -0.2]] has eigenvalue 0.8.
    let zero = write(&dir, "zero.json", r#"{"K": [[0.0]]}"#);
    let out = sof(&["certify", s(&sys), s(&zero)]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["valid"], false);

    let malformed = write(&dir, "malformed.json", r#"{"gain": 1.0}"#);
    assert_eq!(code(&sof(&["certify", s(&sys), s(&malformed)])), 1);
    let wrong_shape = write(&dir, "shape.json", r#"{"K": [[1.0, 2.0]]}"#);
    assert_eq!(code(&sof(&["certify", s(&sys), s(&wrong_shape)])), 1);
    assert_eq!(code(&sof(&["certify", s(&sys), s(&reference), "--epsilon", "0"])), 1);
}

#[test]
fn simulate_writes_csv() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let gain = write(&dir, "k.json", r#"{"K": -0.6}"#);
    let csv = dir.path().join("traj.csv");
    let out = sof(&[
        "simulate",
        s(&sys),
        "--gain",
        s(&gain),
        "--x0",
        "-0.5,0.5",
        "--dt",
        "0.01",
        "--tfinal",
        "1",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,norm"));
    assert_eq!(lines.count(), 101);

    assert_eq!(code(&sof(&["simulate", s(&sys), "--x0", "1,2,3"])), 1);
    assert_eq!(code(&sof(&["simulate", s(&sys), "--x0", "100,0"])), 1);
}

#[test]
fn phase_writes_portrait() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", EXAMPLE);
    let gain = write(&dir, "k.json", r#"{"K": -0.6}"#);
    let outdir = dir.path().join("portrait");
    let out =
        sof(&["phase", s(&sys), "--gain", s(&gain), "--grid", "circle:1:8", "--tfinal", "2", "--outdir", s(&outdir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..8 {
        assert!(outdir.join(format!("traj_{i:03}.csv")).exists());
    }
    let index: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("index.json")).unwrap()).unwrap();
    assert_eq!(index["trajectories"].as_array().unwrap().len(), 8);
    assert_eq!(index["closed_loop"], true);

    let empty = dir.path().join("empty");
    assert_eq!(code(&sof(&["phase", s(&sys), "--grid", "circle:1:0", "--outdir", s(&empty)])), 1);
    assert_eq!(code(&sof(&["phase", s(&sys), "--grid", "hex:1:3", "--outdir", s(&empty)])), 1);
}

fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn demo_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = ["--tfinal", "5"];
    let out_a = sof(&[&["demo", "--outdir", s(&a)][..], &args].concat());
    assert_eq!(code(&out_a), 0, "{}", String::from_utf8_lossy(&out_a.stderr));
    let out_b = sof(&[&["demo", "--outdir", s(&b)][..], &args].concat());
    assert_eq!(code(&out_b), 0);
    assert_eq!(out_a.stdout, out_b.stdout);

    let ta = read_tree(&a);
    assert_eq!(ta, read_tree(&b));
    let names: Vec<String> = ta.iter().map(|(p, _)| p.to_string_lossy().into_owned()).collect();
    for expected in ["system.json", "synth.json", "summary.txt", "closed_loop/index.json", "open_loop/traj_048.csv"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
}

#[test]
fn demo_into_unwritable_location_fails() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "plain", "not a directory");
    let out = sof(&["demo", "--outdir", s(&file.join("sub"))]);
    assert_eq!(code(&out), 1);
}
