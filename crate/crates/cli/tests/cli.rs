use std::path::Path;
use std::process::{Command, Output};

fn arplay(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arplay")).args(args).current_dir(cwd).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_trace_is_an_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = arplay(&["analyze", "nope.jsonl", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_is_a_usage_failure() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.jsonl"), "{not json}\n").unwrap();
    let out = arplay(&["analyze", "bad.jsonl", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = arplay(&["gen-trace", "bench:10", "--out", "t.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn noise_free_wall_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = arplay(&["gen-trace", "bench:1", "--noise", "0", "--dropout", "0", "--out", "t.jsonl"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = arplay(&["analyze", "t.jsonl", "--runs", "1", "--out", "a"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report = json(&d.join("a/report.json"));
    let opps = report["opportunities"].as_array().unwrap();
    assert_eq!(opps.len(), 1);
    assert_eq!(opps[0]["id"], "wall");
    assert!(report["metrics"]["mutual_stability"].is_null());
    let svg = std::fs::read_to_string(d.join("a/gantt.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="opportunity""#).count(), 1);
}

#[test]
fn empty_schedule_makes_no_attempts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = arplay(&["gen-trace", "bench:1", "--out", "t.jsonl"], d);
    assert!(out.status.success());
    // No box covers the whole screen, so nothing is left to schedule.
    let out = arplay(&["analyze", "t.jsonl", "--runs", "1", "--min-visibility", "1.0", "--out", "a"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = arplay(&["schedule", "a/report.json", "--out", "s.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&d.join("s.json"))["events"].as_array().unwrap().len(), 0);

    let out = arplay(&["simulate", "bench:1", "--schedule", "s.json", "--out", "r.json"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&d.join("r.json"));
    assert!(r["gsr"]["overall"].is_null());
    assert!(r["outcomes"].as_array().unwrap().is_empty());
}

#[test]
fn scenes_writes_the_pack() {
    let dir = tempfile::tempdir().unwrap();
    let out = arplay(&["scenes", "--out", "s"], dir.path());
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(dir.path().join("s")).unwrap().count(), 9);
}
