//! End-to-end checks of the command-line interface.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hgoe(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgoe"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn hgoe")
}

fn ok(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn gen_synthetic_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        ok(&hgoe(
            &["gen-synthetic", "--docs", "20", "--entities", "5", "--topics", "3", "--seed", "1", "--out", sub],
            dir.path(),
        ));
    }
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between runs");
    }
}

#[test]
fn batch_over_zero_topics_writes_empty_run_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hgoe(
        &["gen-synthetic", "--docs", "10", "--entities", "5", "--topics", "2", "--seed", "2", "--out", "."],
        dir.path(),
    ));
    ok(&hgoe(
        &["index", "--corpus", "corpus.jsonl", "--out", "index.bin", "--ratio", "0.3"],
        dir.path(),
    ));
    // The ref topics file holds no keyword topics, so a docs batch over
    // it selects nothing.
    ok(&hgoe(
        &["batch", "--task", "docs", "--topics", "topics-ref.jsonl", "--index", "index.bin", "--out", "empty.txt"],
        dir.path(),
    ));
    assert_eq!(fs::read(dir.path().join("empty.txt")).unwrap(), b"");
    assert!(dir.path().join("empty.txt.meta.json").exists());
}

#[test]
fn pipeline_smoke_eval_reports_positive_map() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hgoe(
        &["gen-synthetic", "--docs", "30", "--entities", "6", "--topics", "4", "--seed", "3", "--out", "."],
        dir.path(),
    ));
    ok(&hgoe(
        &["index", "--corpus", "corpus.jsonl", "--out", "index.bin", "--full-text"],
        dir.path(),
    ));
    ok(&hgoe(
        &["batch", "--task", "docs", "--topics", "topics-docs.jsonl", "--index", "index.bin", "--out", "run.txt"],
        dir.path(),
    ));
    let output = hgoe(
        &["eval", "--run", "run.txt", "--qrels", "qrels-docs.txt", "--json"],
        dir.path(),
    );
    ok(&output);
    let record: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(record["primary"]["map"].as_f64().unwrap() > 0.0);
    assert!(record["primary"]["avg_ms_per_query"].as_f64().is_some());
}

#[test]
fn errors_exit_nonzero_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let missing = hgoe(&["stats", "--index", "nope.bin"], dir.path());
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let incompatible = hgoe(&["search", "--task", "ref", "--query", "x"], dir.path());
    assert!(!incompatible.status.success());

    let no_index = hgoe(&["search", "--task", "docs", "--query", "x"], dir.path());
    assert!(!no_index.status.success());
    assert!(String::from_utf8_lossy(&no_index.stderr).contains("--index"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hgoe(
        &["gen-synthetic", "--docs", "10", "--entities", "5", "--topics", "2", "--seed", "4", "--out", "."],
        dir.path(),
    ));
    fs::write(dir.path().join("run.conf"), "ratio = 0.3\nfull_text = false\n").unwrap();
    ok(&hgoe(
        &["index", "--corpus", "corpus.jsonl", "--out", "a.bin", "--config", "run.conf"],
        dir.path(),
    ));
    ok(&hgoe(
        &["index", "--corpus", "corpus.jsonl", "--out", "b.bin", "--ratio", "0.3"],
        dir.path(),
    ));
    assert_eq!(
        fs::read(dir.path().join("a.bin")).unwrap(),
        fs::read(dir.path().join("b.bin")).unwrap(),
        "config-file ratio should equal the explicit flag"
    );
}
