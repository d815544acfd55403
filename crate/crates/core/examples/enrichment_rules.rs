//! Enrichment rules attach guidance to findings. The built-in rule explains
//! how each tool category finds issues; a rule file adds project advice.
//! Changing the rules re-enriches findings that are already stored.
//!
//! cargo run -p triagebase --example enrichment_rules

use chrono::{Duration, Utc};
use serde_json::json;
use triagebase::enrich::load_rules;
use triagebase::ingest::UploadMeta;
use triagebase::project::{Project, ProjectSettings};
use triagebase::views;

const RULES: &str = r#"{
  "rules": [
    {"name": "sqli-advice", "if": {"field": "cwe", "op": "equals", "value": "CWE-89"},
     "add": [{"title": "How to fix", "text": "Use parameterised queries in <Path> instead of string formatting."}]},
    {"name": "vendored-code", "if": {"field": "path", "op": "matches", "value": "^vendor/"},
     "add": [{"title": "Ownership", "text": "Vendored code: report upstream before patching <Path>."}]},
    {"name": "broken", "if": {"field": "colour", "op": "equals", "value": "red"}, "add": [{"title": "x", "text": "y"}]}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (rules, warnings) = load_rules(Some(RULES));
    println!("{} rules loaded; skipped: {:?}\n", rules.len(), warnings.iter().map(|w| &w.message).collect::<Vec<_>>());

    let report = json!({
        "schema_version": "1",
        "tool": {"name": "codescan", "category": "static-analysis"},
        "findings": [
            {"rule_id": "sqli", "title": "SQL injection", "location": {"path": "api/users.py"}, "cwe_ids": ["CWE-89"], "severity_raw": "high"},
            {"rule_id": "eval", "title": "Use of eval", "location": {"path": "vendor/lib/parse.js"}, "severity_raw": "medium"}
        ]
    });
    let now = Utc::now();
    let mut p = Project::in_memory("api", ProjectSettings::default())?;
    p.ingest(&serde_json::to_vec(&report)?, None, UploadMeta::new("api", now))?;
    p.set_enrichment_rules(Some(RULES.to_string()), now + Duration::seconds(1))?;

    for f in views::aggregated_findings(&p.snapshot()) {
        println!("{} ({})", f.canonical_title, f.location.path);
        for n in &f.enrichment_notes {
            println!("  [{}] {}: {}", n.rule_name, n.title, n.text);
        }
    }
    Ok(())
}
