use std::path::Path;
use std::process::{Command, Output};

const CASE1: &str = r#"{"format-version": 1, "grid-size": 5, "start": [1, 1],
    "cells-of-interest": [{"cell": [1, 5], "weight": 3.0}], "target-weight": 500.0, "battery": 25}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sar-contrast"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_then_reuse_policy() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "case1.json", CASE1);
    let policy = dir.path().join("policy.json");
    let out = run(&[
        "solve",
        &scenario,
        "--epsilon",
        "0.5",
        "--output",
        policy.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["gap"].as_f64().unwrap() <= 0.5);

    let args = [
        "rollout",
        &scenario,
        "--seed",
        "3",
        "--policy",
        policy.to_str().unwrap(),
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&run(&args)));
    let trace: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(trace["seed"], 3);

    let out = run(&[
        "contrast",
        &scenario,
        "--path",
        "1,1;1,2;1,3;1,4;1,5;2,5;3,5;4,5;5,5",
        "--policy",
        policy.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("0.684") && text.contains("finds the target"), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "case1.json", CASE1);
    let bad = write(dir.path(), "bad.json", r#"{"format-version": 1, "grid-size": 0}"#);
    assert_eq!(run(&["solve", &bad]).status.code(), Some(2));
    assert_eq!(
        run(&["contrast", &scenario, "--path", "1,1;3,1", "--epsilon", "0.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["rollout", &scenario, "--seed", "1", "--true-target", "9,9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["case-study", "3"]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", &scenario, "--epsilon", "1e-9", "--max-trials", "1"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["solve", dir.path().join("missing.json").to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let other = write(dir.path(), "other.json", &CASE1.replace("25}", "24}"));
    let policy = dir.path().join("p.json");
    run(&["solve", &other, "--output", policy.to_str().unwrap()]);
    assert_eq!(
        run(&[
            "rollout",
            &scenario,
            "--seed",
            "1",
            "--policy",
            policy.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn case_studies() {
    let one = run(&["case-study", "1"]);
    assert_eq!(one.status.code(), Some(0));
    let text = stdout(&one);
    assert!(text.contains("334.154"), "{text}");
    let two = run(&["case-study", "2", "--json"]);
    assert_eq!(two.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&two)).unwrap();
    assert_eq!(v["counterfactual"]["feasibility-report"]["truncation-cause"], "battery");
}
