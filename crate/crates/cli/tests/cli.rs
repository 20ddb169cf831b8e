use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use relwalk::explain::Explanation;

fn relwalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relwalk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = relwalk(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

/// Small dataset plus a briefly trained model.
fn fixture(dir: &Path) {
    ok(dir, &["gen-data", "--count", "40", "--n", "12", "--seed", "3", "--out", "d.jsonl"]);
    ok(dir, &["train", "--data", "d.jsonl", "--width", "8", "--epochs", "3", "--out", "m.json"]);
}

#[test]
fn gen_data_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.jsonl", "b.jsonl"] {
        ok(d, &["gen-data", "--count", "2", "--n", "20", "--seed", "7", "--out", out]);
    }
    assert_eq!(read(d, "a.jsonl"), read(d, "b.jsonl"));
    assert_eq!(String::from_utf8(read(d, "a.jsonl")).unwrap().lines().count(), 2);
}

#[test]
fn huge_threshold_prunes_every_walk() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    for (t, out) in [("0", "all.json"), ("1e9", "none.json")] {
        ok(d, &["explain", "--model", "m.json", "--data", "d.jsonl", "--threshold", t, "--out", out]);
    }
    let all: Explanation = serde_json::from_slice(&read(d, "all.json")).unwrap();
    let none: Explanation = serde_json::from_slice(&read(d, "none.json")).unwrap();
    assert!(!all.walks.is_empty());
    assert!(none.walks.is_empty());
}

#[test]
fn zero_bias_walks_sum_to_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--count", "20", "--n", "10", "--seed", "1", "--out", "d.jsonl"]);
    ok(d, &["train", "--data", "d.jsonl", "--width", "4", "--epochs", "2", "--zero-bias", "--out", "m.json"]);
    ok(d, &["explain", "--model", "m.json", "--data", "d.jsonl", "--method", "gi", "--out", "e.json"]);
    let e: Explanation = serde_json::from_slice(&read(d, "e.json")).unwrap();
    let total: f64 = e.walks.iter().map(|w| w.score).sum();
    assert!((total - e.f_value).abs() <= 1e-9 * e.f_value.abs().max(1.0));
}

#[test]
fn pipeline_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-data", "--count", "100", "--n", "20", "--seed", "7", "--out", "d.jsonl"]);
    let data_before = read(d, "d.jsonl");
    ok(d, &["train", "--data", "d.jsonl", "--epochs", "5", "--out", "m.json"]);
    ok(
        d,
        &["explain", "--model", "m.json", "--data", "d.jsonl", "--index", "3", "--top", "10", "--out", "e.json", "--dot", "e.dot"],
    );
    ok(d, &["flip-eval", "--model", "m.json", "--data", "d.jsonl", "--start", "80", "--out-dir", "eval"]);
    ok(d, &["export-dot", "--input", "e.json", "--out", "again.dot"]);

    assert_eq!(read(d, "d.jsonl"), data_before);
    assert_eq!(read(d, "e.dot"), read(d, "again.dot"));
    let log = String::from_utf8(read(d, "m.json.log.csv")).unwrap();
    assert_eq!(log.lines().count(), 6);
    let summary = String::from_utf8(read(d, "eval/summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("provider,task,mean,stderr,count"));
    assert_eq!(summary.lines().count(), 1 + 5 * 2);
    let rows = String::from_utf8(read(d, "eval/rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 20 * 5 * 2);
    for m in ["d.jsonl.manifest.json", "m.json.manifest.json", "e.json.manifest.json", "eval/manifest.json"] {
        let v: serde_json::Value = serde_json::from_slice(&read(d, m)).unwrap();
        assert!(v["outputs"].as_object().is_some_and(|o| !o.is_empty()), "{m}");
    }
    assert!(start.elapsed().as_secs() < 120);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let first = (read(d, "m.json"), read(d, "m.json.log.csv"), read(d, "m.json.manifest.json"));
    ok(d, &["train", "--data", "d.jsonl", "--width", "8", "--epochs", "3", "--out", "m.json"]);
    assert_eq!(first, (read(d, "m.json"), read(d, "m.json.log.csv"), read(d, "m.json.manifest.json")));
    let explain = ["explain", "--model", "m.json", "--data", "d.jsonl", "--out", "e.json"];
    ok(d, &explain);
    let e = read(d, "e.json");
    ok(d, &explain);
    assert_eq!(e, read(d, "e.json"));
}

fn failure(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = relwalk(dir, args);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    (out.status.code().unwrap(), stderr)
}

#[test]
fn failures_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    fs::write(d.join("bad.json"), "{").unwrap();
    fs::write(d.join("bad.jsonl"), "not json\n").unwrap();

    let (missing, msg) = failure(d, &["explain", "--model", "nope.json", "--data", "d.jsonl", "--out", "e.json"]);
    assert!(msg.starts_with("error code=3 kind=missing-file"), "{msg}");
    let (bad_model, _) = failure(d, &["explain", "--model", "bad.json", "--data", "d.jsonl", "--out", "e.json"]);
    let (bad_data, _) = failure(d, &["explain", "--model", "m.json", "--data", "bad.jsonl", "--out", "e.json"]);
    assert_eq!(bad_model, bad_data);
    let (shape, _) =
        failure(d, &["explain", "--model", "m.json", "--data", "d.jsonl", "--gamma", "1,1,1", "--out", "e.json"]);
    let (arg, _) = failure(d, &["explain", "--model", "m.json", "--data", "d.jsonl", "--index", "999", "--out", "e.json"]);
    let mut codes = vec![missing, bad_model, shape, arg];
    codes.sort();
    codes.dedup();
    assert_eq!(codes.len(), 4);
    assert!(!d.join("e.json").exists());
}

#[test]
fn refuses_to_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fixture(d);
    let before = read(d, "d.jsonl");
    let (code, _) = failure(d, &["explain", "--model", "m.json", "--data", "d.jsonl", "--out", "d.jsonl"]);
    assert_ne!(code, 0);
    assert_eq!(read(d, "d.jsonl"), before);
}
