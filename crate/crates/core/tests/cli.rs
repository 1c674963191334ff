use std::process::{Command, Output};

use serde_json::Value;

fn boldplay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boldplay")).args(args).output().expect("spawn boldplay")
}

const GAME: &str = r#"{"n":2,"fortunes":[3,4],"goal":5}"#;

#[test]
fn certify_example() {
    let out = boldplay(&["certify", "--game", GAME, "--model", "proportional", "--phi", "linear:1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["report"]["is_nash"], true);
    assert_eq!(doc["run_spec"]["model"]["phi"]["shape"], "linear");
}

#[test]
fn exit_codes() {
    let refuted =
        ["certify", "--game", r#"{"n":2,"fortunes":[4,3],"goal":5}"#, "--model", "constant", "--c", "0.5"];
    assert_eq!(boldplay(&refuted).status.code(), Some(0));
    let mut expect = refuted.to_vec();
    expect.push("--expect");
    assert_eq!(boldplay(&expect).status.code(), Some(1));
    assert_eq!(boldplay(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        boldplay(&["certify", "--game", "missing.json", "--model", "proportional"]).status.code(),
        Some(2)
    );
    assert_eq!(boldplay(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_documents_grammar() {
    let out = boldplay(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("truncated-linear:EPS:CUT"));
    assert!(text.contains("Exit codes"));
}

#[test]
fn game_from_file_and_table_from_file() {
    let dir = std::env::temp_dir().join(format!("boldplay-it-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let game = dir.join("game.json");
    std::fs::write(&game, GAME).unwrap();
    let f = dir.join("f.json");
    std::fs::write(&f, r#"{"form": "exp", "epsilon": 0.01}"#).unwrap();

    let out = boldplay(&[
        "evaluate",
        "--game",
        game.to_str().unwrap(),
        "--model",
        "proportional",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    let row = csv.lines().find(|l| l.starts_with("3,4,")).unwrap();
    let q0: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((q0 - 3.0 / 7.0).abs() < 1e-12);

    let at = format!("@{}", f.display());
    let out = boldplay(&["gmin", "--f", &at, "--M", "10", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 11);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--game",
        GAME,
        "--model",
        "proportional",
        "--runs",
        "20000",
        "--seed",
        "5",
        "--format",
        "table",
    ];
    let a = boldplay(&args);
    let b = boldplay(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().starts_with("runs: 20000"));
}
