use std::process::Command;

use serde_json::{json, Value};

fn triagebase(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_triagebase")).args(args).env("RUST_LOG", "warn").output().unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn ingest_stats_and_export_offline() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"storage": {"path": "data"}}"#).unwrap();
    let report = dir.path().join("scan.json");
    let doc = json!({"schema_version": "1", "tool": {"name": "codescan", "category": "static-analysis"}, "findings": [
        {"rule_id": "a", "title": "Hard coded password", "location": {"path": "cfg.py"}, "severity_raw": "high"},
        {"rule_id": "b", "title": "Weak hash function", "location": {"path": "auth.py"}, "severity_raw": "medium"}
    ]});
    std::fs::write(&report, serde_json::to_vec(&doc).unwrap()).unwrap();
    let cfg = config.to_str().unwrap();

    let (ok, out, err) = triagebase(&["--config", cfg, "ingest", "--project", "web", "--file", report.to_str().unwrap()]);
    assert!(ok, "{err}");
    let summary: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(summary["new_raw"], 2);

    let (ok, out, err) = triagebase(&["--config", cfg, "stats", "--project", "web"]);
    assert!(ok, "{err}");
    let stats: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(stats["n_raw_cum"], 2);
    assert_eq!(stats["n_reports_cum"], 1);

    let log = dir.path().join("log.jsonl");
    let (ok, _, err) = triagebase(&["--config", cfg, "export", "--project", "web", "--out", log.to_str().unwrap()]);
    assert!(ok, "{err}");
    let lines = std::fs::read_to_string(&log).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(first["op"], "assert");
}

#[test]
fn offline_commands_need_storage() {
    let (ok, _, err) = triagebase(&["stats", "--project", "web"]);
    assert!(!ok);
    assert!(err.contains("storage.path"), "{err}");
}
