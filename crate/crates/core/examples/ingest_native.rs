//! Upload a native report into an in-memory project and look at what the
//! knowledge base derived from it.
//!
//! cargo run -p triagebase --example ingest_native

use chrono::Utc;
use serde_json::json;
use triagebase::ingest::UploadMeta;
use triagebase::project::{Project, ProjectSettings};
use triagebase::views;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = json!({
        "schema_version": "1",
        "tool": {"name": "codescan", "version": "1.4.2", "category": "static-analysis"},
        "scan_scope": "backend",
        "findings": [
            {"rule_id": "python.sqli", "title": "SQL injection", "description": "query string built from request arguments",
             "location": {"path": "shop/orders.py", "line": 40}, "severity_raw": "high", "cwe_ids": ["CWE-89"]},
            {"rule_id": "python.yaml-load", "title": "Unsafe YAML load", "description": "yaml.load without a safe loader",
             "location": {"path": "shop/config.py", "line": 12}, "severity_raw": "medium", "cwe_ids": ["CWE-502"]},
            {"rule_id": "python.assert", "title": "Assert used for access control",
             "location": {"path": "shop/admin.py", "line": 7}, "severity_raw": "low"},
            {"title": "entry without a rule id is skipped with a warning", "location": {"path": "x.py"}}
        ]
    });

    let mut project = Project::in_memory("shop", ProjectSettings::default())?;
    let summary = project.ingest(&serde_json::to_vec(&report)?, None, UploadMeta::new("shop", Utc::now()))?;
    println!("report {}: {} new locations, {} new findings", summary.report_id, summary.new_raw, summary.new_agg);
    for w in &summary.warnings {
        println!("  warning {w}");
    }
    println!("rules fired: {:?}", summary.trace.rule_names());

    let store = project.snapshot();
    println!("\n{:<10} {:>4}  title", "severity", "prio");
    for f in views::top_priority(&store, 10) {
        println!("{:<10} {:>4}  {}", f.severity.band.as_str(), f.effective_priority().value(), f.canonical_title);
    }
    Ok(())
}
