//! A project stored on disk: the belief log survives a restart and the
//! reopened store is identical to the one that was closed.
//!
//! cargo run -p triagebase --example persistent_store [DIR]

use std::path::PathBuf;

use chrono::Utc;
use triagebase::document::StoreExt;
use triagebase::model::Status;
use triagebase::project::{Project, ProjectSettings};
use triagebase::synthetic::{replay, weekly_stream, STREAM_PROJECT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("triagebase-example-{}", std::process::id())));

    let before = {
        let mut p = Project::open(STREAM_PROJECT, ProjectSettings::default(), &dir)?;
        if p.snapshot().is_empty() {
            replay(&mut p, &weekly_stream(3, 3))?;
            let first = p.snapshot().raw_findings()[0].raw_id.clone();
            p.set_status(first.as_str(), Status::Invalid, "frank", Utc::now())?;
        }
        p.snapshot()
    };
    println!("stored {} beliefs in {}", before.len(), dir.display());
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        println!("  {:<20} {:>9} bytes", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }

    let p = Project::open(STREAM_PROJECT, ProjectSettings::default(), &dir)?;
    println!("reopened: identical store = {}", before.canonically_equal(&p.snapshot()));
    let s = p.weekly(Utc::now().date_naive());
    println!("week ending {}: {} raw, {} aggregated, {} invalid", s.as_of, s.n_raw_cum, s.n_agg_cum, s.status_counts[&Status::Invalid]);
    Ok(())
}
