//! Ten weeks of synthetic scanner traffic with user triage, and the weekly
//! indicators computed from the store after each week.
//!
//! cargo run -p triagebase --example weekly_metrics

use triagebase::metrics::{check_monotone, check_new_findings};
use triagebase::model::{SeverityBand, Status};
use triagebase::project::{Project, ProjectSettings};
use triagebase::synthetic::{replay, weekly_stream, STREAM_PROJECT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weeks = weekly_stream(42, 10);
    let mut project = Project::in_memory(STREAM_PROJECT, ProjectSettings::default())?;
    let snapshots = replay(&mut project, &weeks)?;

    println!(
        "{:<11} {:>7} {:>5} {:>5} {:>4} {:>5} {:>5} {:>4}   crit/high/med/low/info",
        "as of", "reports", "raw", "agg", "new", "open", "gone", "prio"
    );
    for s in &snapshots {
        let sev: Vec<String> = SeverityBand::ALL.iter().rev().map(|b| s.severity_counts[b].to_string()).collect();
        println!(
            "{:<11} {:>7} {:>5} {:>5} {:>4} {:>5} {:>5} {:>4}   {}",
            s.as_of.to_string(),
            s.n_reports_cum,
            s.n_raw_cum,
            s.n_agg_cum,
            s.n_new_7d,
            s.status_counts[&Status::Open],
            s.status_counts[&Status::Disappeared],
            s.n_prio,
            sev.join("/")
        );
        s.check_identities()?;
    }
    for w in snapshots.windows(2) {
        check_monotone(&w[0], &w[1])?;
        check_new_findings(&w[0], &w[1])?;
    }
    println!("\nstatus and severity sums, monotonicity and new-finding counts all check out");
    Ok(())
}
