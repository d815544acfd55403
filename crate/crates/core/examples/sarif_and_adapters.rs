//! Format detection and the adapters: one SARIF log, one dependency scan
//! and one secret scan, each turned into finding drafts.
//!
//! cargo run -p triagebase --example sarif_and_adapters

use chrono::Utc;
use serde_json::json;
use triagebase::ingest::{parse_document, AdapterRegistry, UploadMeta};
use triagebase::model::{FormatTag, ToolCategory, ToolDescriptor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let registry = AdapterRegistry::default();
    println!("registered formats: {:?}\n", registry.tags());

    let sarif = json!({
        "version": "2.1.0",
        "runs": [{
            "tool": {"driver": {"name": "lintpy", "version": "0.9", "rules": [{
                "id": "py/path-injection",
                "shortDescription": {"text": "Uncontrolled data used in path expression"},
                "properties": {"tags": ["external/cwe/cwe-022"], "security-severity": "7.5"}
            }]}},
            "results": [{
                "ruleId": "py/path-injection",
                "level": "warning",
                "message": {"text": "This path depends on a user-provided value."},
                "locations": [{"physicalLocation": {"artifactLocation": {"uri": "app/files.py"}, "region": {"startLine": 31}}}]
            }]
        }]
    });
    let deps = json!({
        "manifest": "package-lock.json",
        "findings": [{"component": "minimist", "version": "1.2.5", "cves": ["CVE-2021-44906"], "cvss": 9.8, "fixed_version": "1.2.6"}]
    });
    let secrets = json!({"findings": [{"rule": "aws-access-key", "path": "deploy/.env", "line": 4, "secret_hash": "9f86d081884c7d659a2f"}]});

    let dep_tool = ToolDescriptor::new("depwatch", "2.1", ToolCategory::DependencyScan)?;
    let secret_tool = ToolDescriptor::new("leakwatch", "0.3", ToolCategory::SecretScan)?;
    let inputs = [
        ("sarif (detected)", sarif, None, UploadMeta::new("demo", Utc::now())),
        ("dep-scan", deps, Some(FormatTag::DepScan), UploadMeta::new("demo", Utc::now()).with_tool(dep_tool)),
        ("secret-scan", secrets, Some(FormatTag::SecretScan), UploadMeta::new("demo", Utc::now()).with_tool(secret_tool)),
    ];
    for (label, doc, tag, meta) in inputs {
        let (report, outcome) = parse_document(&registry, &serde_json::to_vec(&doc)?, tag, &meta)?;
        println!("{label}: tool {} ({}), format {}", report.tool.name, report.tool.category, report.format_tag);
        for d in outcome.drafts {
            println!(
                "  {} {:<24} {:<20} {} {:?}",
                d.raw_id,
                d.rule_id,
                d.location.path,
                d.severity.band.as_str(),
                d.cwe_ids
            );
        }
    }
    Ok(())
}
