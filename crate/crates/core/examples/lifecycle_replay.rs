//! Status lifecycle across reports: findings that stop showing up are
//! marked Disappeared by the system, come back as Open, and user triage
//! changes how much absence a finding tolerates.
//!
//! cargo run -p triagebase --example lifecycle_replay

use chrono::{Duration, TimeZone, Utc};
use serde_json::json;
use triagebase::document::StoreExt;
use triagebase::ingest::UploadMeta;
use triagebase::model::Status;
use triagebase::project::{Project, ProjectSettings};

fn scan(rules: &[&str]) -> Vec<u8> {
    let findings: Vec<_> = rules
        .iter()
        .map(|r| json!({"rule_id": r, "title": format!("{r} issue"), "location": {"path": format!("src/{r}.c")}, "severity_raw": "medium"}))
        .collect();
    serde_json::to_vec(&json!({"schema_version": "1", "tool": {"name": "cscan"}, "findings": findings})).unwrap()
}

fn show(project: &Project, label: &str) {
    let store = project.snapshot();
    let row: Vec<String> = store.raw_findings().iter().map(|f| format!("{}={}", f.rule_id, f.status)).collect();
    println!("{label:<28} {}", row.join("  "));
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut p = Project::in_memory("fw", ProjectSettings::default())?;
    let day = |n| Utc.with_ymd_and_hms(2024, 2, 5, 6, 0, 0).unwrap() + Duration::days(n);

    p.ingest(&scan(&["alpha", "beta", "gamma"]), None, UploadMeta::new("fw", day(0)).with_report_id("nightly-0"))?;
    show(&p, "day 0: all three reported");

    let beta = p.snapshot().raw_findings().iter().find(|f| f.rule_id == "beta").unwrap().raw_id.clone();
    let gamma = p.snapshot().raw_findings().iter().find(|f| f.rule_id == "gamma").unwrap().raw_id.clone();
    p.set_status(beta.as_str(), Status::InWork, "erin", day(0) + Duration::hours(2))?;
    p.set_status(gamma.as_str(), Status::Accepted, "erin", day(0) + Duration::hours(3))?;
    show(&p, "triage: beta, gamma");

    p.ingest(&scan(&[]), None, UploadMeta::new("fw", day(1)).with_report_id("nightly-1"))?;
    show(&p, "day 1: nothing reported");
    p.ingest(&scan(&[]), None, UploadMeta::new("fw", day(2)).with_report_id("nightly-2"))?;
    show(&p, "day 2: nothing reported");
    p.ingest(&scan(&["alpha"]), None, UploadMeta::new("fw", day(3)).with_report_id("nightly-3"))?;
    show(&p, "day 3: alpha is back");

    match p.set_status(beta.as_str(), Status::Disappeared, "erin", day(3)) {
        Err(e) => println!("\nusers cannot set Disappeared: {e}"),
        Ok(_) => unreachable!(),
    }

    println!("\naudit log:");
    print!("{}", p.audit());
    Ok(())
}
