use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.push("tests/data");
    path.push(name);
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqdesign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = run(&full);
    let doc = serde_json::from_slice(&out.stdout).expect("stdout is one JSON document");
    (out.status.code().expect("exit code"), doc)
}

#[test]
fn count_prints_the_number_of_schemes() {
    let g1 = data("g1.json");
    let out = run(&["count", "--game", &g1, "--budget", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "10");
    let (code, doc) = json(&["count", "--game", &g1, "--budget", "2"]);
    assert_eq!(code, 0);
    assert_eq!(doc["count"], "10");
    assert_eq!(doc["schema"], 1);
}

#[test]
fn weak_verdicts_and_exit_codes() {
    let g1 = data("g1.json");
    let (code, doc) = json(&["check-weak", "--game", &g1, "--budget", "0"]);
    assert_eq!((code, doc["verdict"].as_str()), (1, Some("no")));
    assert!(doc["witness"].is_null());

    let (code, doc) = json(&["check-weak", "--game", &g1, "--budget", "1"]);
    assert_eq!((code, doc["verdict"].as_str()), (0, Some("yes")));
    let witness = &doc["witness"];
    assert_eq!(witness["scheme"]["cost"], 1);
    assert_eq!(witness["z"]["1"], "1/1");
    assert_eq!(witness["lasso"]["cycle"][0]["state"], "a");
    assert!(doc.get("timings").is_none());
}

#[test]
fn strong_optimum_carries_a_certificate() {
    let g1 = data("g1.json");
    let (code, doc) = json(&["opt-strong", "--game", &g1]);
    assert_eq!(code, 0);
    assert_eq!(doc["optimum"], 2);
    assert!(doc["witness"]["certificate"]["grid_points"].as_u64().unwrap() > 0);

    let (code, doc) = json(&["exact-weak", "--game", &g1, "--budget", "2"]);
    assert_eq!((code, doc["verdict"].as_str()), (1, Some("no")));
    let (code, _) = json(&["unique-weak", "--game", &g1]);
    assert_eq!(code, 0);
}

#[test]
fn spec_flag_overrides_the_file() {
    let g1 = data("g1.json");
    let (code, doc) = json(&["check-weak", "--game", &g1, "--budget", "0", "--spec", "GF !p"]);
    assert_eq!(code, 0);
    assert_eq!(doc["witness"]["lasso"]["cycle"][0]["state"], "b");
}

#[test]
fn input_errors_exit_with_two() {
    let g1 = data("g1.json");
    for args in [
        vec!["check-weak", "--budget", "1"],
        vec!["check-weak", "--game", "/nonexistent/game.json", "--budget", "1"],
        vec!["check-weak", "--game", g1.as_str(), "--budget", "1", "--spec", "GF"],
        vec![
            "check-weak",
            "--game",
            g1.as_str(),
            "--budget",
            "1",
            "--spec",
            "GF unknown",
        ],
        vec!["no-such-command"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn resource_limits_exit_with_three() {
    let g1 = data("g1.json");
    let (code, doc) = json(&["check-weak", "--game", &g1, "--budget", "2", "--scheme-cap", "1"]);
    assert_eq!(code, 3);
    assert_eq!(doc["verdict"], "resource-limit");
}

#[test]
fn punishment_table_is_exact() {
    let g1 = data("g1.json");
    let out = run(&["punish", &g1]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("pun_1(a) = 0/1"), "{text}");
    assert!(text.contains("pun_1(b) = 1/1"), "{text}");
}

#[test]
fn oracle_agrees_on_g1() {
    let g1 = data("g1.json");
    for (budget, expected) in [("0", 1), ("1", 0)] {
        let (code, _) = json(&["oracle", "check-weak", "--game", &g1, "--budget", budget]);
        assert_eq!(code, expected, "budget {budget}");
    }
}

#[test]
fn timings_only_on_request() {
    let g1 = data("g1.json");
    let (_, doc) = json(&["--timings", "check-weak", "--game", &g1, "--budget", "1"]);
    assert!(doc["timings"].is_object());
}

#[test]
fn lp_dump_writes_files() {
    let dir = std::env::temp_dir().join(format!("eqdesign-dump-{}", std::process::id()));
    let g1 = data("g1.json");
    let out = run(&[
        "check-weak",
        "--game",
        &g1,
        "--budget",
        "1",
        "--dump-lp",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let files = std::fs::read_dir(&dir).unwrap().count();
    assert!(files > 0);
    std::fs::remove_dir_all(&dir).unwrap();
}
