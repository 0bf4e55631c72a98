use std::path::PathBuf;
use std::process::{Command, Output};

fn indigo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indigo")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn presets_prints_three() {
    let out = indigo(&["presets"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn replay_converged_fixture() {
    let out = indigo(&["replay", &fixture("converged-five.journal.jsonl")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("phase: converged"));
    assert!(text.contains("iterations: 5"));
}

#[test]
fn replay_prefix_and_json() {
    let out = indigo(&["replay", &fixture("converged-five.journal.jsonl"), "--at-seq", "4", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["last_seq"], 4);
    assert_eq!(v["phase"], "awaiting_scores");
}

#[test]
fn corrupted_journal_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("converged-five.journal.jsonl")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(5);
    let path = dir.path().join("gap.journal.jsonl");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = indigo(&["replay", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corruption"));

    let path = dir.path().join("junk.journal.jsonl");
    std::fs::write(&path, "{not json\n").unwrap();
    assert_eq!(indigo(&["replay", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn malformed_run_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"session": 3}"#).unwrap();
    let out = indigo(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("validation"));
}

#[test]
fn headless_run_converges() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("headless.json")).unwrap()).unwrap();
    let journal = dir.path().join("offsite.journal.jsonl");
    config["journal"] = serde_json::json!(journal);
    let path = dir.path().join("run.json");
    std::fs::write(&path, config.to_string()).unwrap();

    let out = indigo(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["phase"], "converged");

    let replayed = indigo(&["replay", journal.to_str().unwrap(), "--json"]);
    assert!(replayed.status.success());
    let state: serde_json::Value = serde_json::from_str(&stdout(&replayed)).unwrap();
    assert_eq!(state["plan"]["revision"], summary["plan_revision"]);
}

#[test]
fn simulate_twenty_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let journals = dir.path().join("journals");
    let out = indigo(&[
        "simulate",
        "--seeds",
        "0..19",
        "--oracle",
        &fixture("oracle-twelve.json"),
        "--out",
        csv_path.to_str().unwrap(),
        "--journal-dir",
        journals.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["seed", "iterations", "converged", "initial_aggregate", "final_aggregate"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| &r[2] == "true"));
    assert_eq!(std::fs::read_dir(&journals).unwrap().count(), 20);

    let bad = indigo(&["simulate", "--seeds", "5..1", "--oracle", &fixture("oracle-twelve.json"), "--out", "x.csv"]);
    assert_eq!(bad.status.code(), Some(1));
}
