//! Weekly indicator snapshots and their accounting identities.
//!
//! A snapshot `as_of` a date counts everything received before the end of
//! that day (UTC). Statuses and severities are taken as they were at that
//! moment, from the audit trail and the assessment history, so snapshots
//! can be computed after the fact.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::document::{Store, StoreExt};
use crate::model::{RawId, SeverityBand, Status, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklySnapshot {
    pub project_id: String,
    pub as_of: NaiveDate,
    /// Distinct `(tool, scope)` pairs that reported.
    pub n_activities: u64,
    pub n_tools: u64,
    pub n_reports_cum: u64,
    pub n_raw_cum: u64,
    pub n_agg_cum: u64,
    /// Aggregates first seen within the seven days up to `as_of`.
    pub n_new_7d: u64,
    /// Aggregates with a user-assigned priority.
    pub n_prio: u64,
    pub status_counts: BTreeMap<Status, u64>,
    pub severity_counts: BTreeMap<SeverityBand, u64>,
    pub n_user_inputs_7d: u64,
}

/// End of `as_of` (exclusive).
pub fn cutoff(as_of: NaiveDate) -> Timestamp {
    let next = as_of.succ_opt().expect("date in range");
    Utc.from_utc_datetime(&next.and_hms_opt(0, 0, 0).expect("midnight"))
}

pub fn weekly_snapshot(store: &Store, project_id: &str, as_of: NaiveDate) -> WeeklySnapshot {
    let end = cutoff(as_of);
    let start = end - Duration::days(7);
    let in_window = |t: Timestamp| t >= start && t < end;

    let reports: Vec<_> = store.reports().into_iter().filter(|r| r.received_at < end).collect();
    let activities: BTreeSet<(&str, &str)> = reports.iter().map(|r| (r.tool.name.as_str(), r.scan_scope.as_str())).collect();
    let tools: BTreeSet<&str> = activities.iter().map(|(t, _)| *t).collect();

    // Latest status per raw finding before the cutoff. Every finding has a
    // creation entry at its first sighting.
    let mut latest: BTreeMap<&RawId, (Timestamp, u64, Status)> = BTreeMap::new();
    for c in store.status_changes() {
        if c.at >= end {
            continue;
        }
        let e = latest.entry(&c.raw_id).or_insert((c.at, c.seq, c.new));
        if (c.at, c.seq) >= (e.0, e.1) {
            *e = (c.at, c.seq, c.new);
        }
    }
    let mut status_counts: BTreeMap<Status, u64> = Status::ALL.iter().map(|s| (*s, 0)).collect();
    let mut n_raw = 0;
    for f in store.raw_findings() {
        if f.first_seen >= end {
            continue;
        }
        n_raw += 1;
        let s = latest.get(&f.raw_id).map_or(f.status, |e| e.2);
        *status_counts.entry(s).or_default() += 1;
    }

    let mut severity_counts: BTreeMap<SeverityBand, u64> = SeverityBand::ALL.iter().map(|b| (*b, 0)).collect();
    let (mut n_agg, mut n_new, mut n_prio) = (0, 0, 0);
    for c in store.aggregates() {
        if c.first_seen >= end {
            continue;
        }
        n_agg += 1;
        if in_window(c.first_seen) {
            n_new += 1;
        }
        let band = store
            .severity(&c.agg_id)
            .and_then(|s| s.level_as_of(end).or(Some(s.level)))
            .map_or(SeverityBand::Info, |l| l.band);
        *severity_counts.entry(band).or_default() += 1;
        if store.priority(&c.agg_id).is_some_and(|p| p.assigned_before(end)) {
            n_prio += 1;
        }
    }

    WeeklySnapshot {
        project_id: project_id.to_string(),
        as_of,
        n_activities: activities.len() as u64,
        n_tools: tools.len() as u64,
        n_reports_cum: reports.len() as u64,
        n_raw_cum: n_raw,
        n_agg_cum: n_agg,
        n_new_7d: n_new,
        n_prio,
        status_counts,
        severity_counts,
        n_user_inputs_7d: store.user_inputs().iter().filter(|(_, u)| in_window(u.at())).count() as u64,
    }
}

impl WeeklySnapshot {
    pub fn status_sum(&self) -> u64 {
        self.status_counts.values().sum()
    }

    pub fn severity_sum(&self) -> u64 {
        self.severity_counts.values().sum()
    }

    /// Status buckets sum to the raw count; severity buckets to the aggregate count.
    pub fn check_identities(&self) -> Result<(), String> {
        if self.status_sum() != self.n_raw_cum {
            return Err(format!("{}: status sum {} != n_raw_cum {}", self.as_of, self.status_sum(), self.n_raw_cum));
        }
        if self.severity_sum() != self.n_agg_cum {
            return Err(format!(
                "{}: severity sum {} != n_agg_cum {}",
                self.as_of,
                self.severity_sum(),
                self.n_agg_cum
            ));
        }
        if self.n_agg_cum > self.n_raw_cum {
            return Err(format!("{}: more aggregates than raw findings", self.as_of));
        }
        Ok(())
    }
}

/// Cumulative counts never decrease from one snapshot to the next.
pub fn check_monotone(prev: &WeeklySnapshot, next: &WeeklySnapshot) -> Result<(), String> {
    let pairs = [
        ("n_reports_cum", prev.n_reports_cum, next.n_reports_cum),
        ("n_raw_cum", prev.n_raw_cum, next.n_raw_cum),
        ("n_agg_cum", prev.n_agg_cum, next.n_agg_cum),
    ];
    for (name, a, b) in pairs {
        if b < a {
            return Err(format!("{name} decreased from {a} to {b} ({} -> {})", prev.as_of, next.as_of));
        }
    }
    Ok(())
}

/// For snapshots exactly a week apart, the new count is the aggregate delta.
pub fn check_new_findings(prev: &WeeklySnapshot, next: &WeeklySnapshot) -> Result<(), String> {
    if next.as_of - prev.as_of != Duration::days(7) {
        return Err("snapshots are not one week apart".into());
    }
    let delta = next.n_agg_cum - prev.n_agg_cum.min(next.n_agg_cum);
    if next.n_new_7d != delta {
        return Err(format!("n_new_7d {} != delta n_agg_cum {delta}", next.n_new_7d));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank(as_of: NaiveDate) -> WeeklySnapshot {
        WeeklySnapshot {
            project_id: "A".into(),
            as_of,
            n_activities: 0,
            n_tools: 0,
            n_reports_cum: 0,
            n_raw_cum: 0,
            n_agg_cum: 0,
            n_new_7d: 0,
            n_prio: 0,
            status_counts: Status::ALL.iter().map(|s| (*s, 0)).collect(),
            severity_counts: SeverityBand::ALL.iter().map(|b| (*b, 0)).collect(),
            n_user_inputs_7d: 0,
        }
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn cutoff_is_next_midnight() {
        assert_eq!(cutoff(date(2023, 1, 9)).to_rfc3339(), "2023-01-10T00:00:00+00:00");
    }

    #[test]
    fn status_identity_with_open_and_disappeared() {
        let mut s = blank(date(2023, 1, 30));
        s.status_counts.insert(Status::Open, 1153);
        s.status_counts.insert(Status::Disappeared, 40);
        s.n_raw_cum = 1193;
        s.check_identities().unwrap();
        s.n_raw_cum = 1192;
        assert!(s.check_identities().is_err());
    }

    #[test]
    fn severity_identity_for_five_buckets() {
        let mut s = blank(date(2023, 1, 9));
        for (b, n) in SeverityBand::ALL.iter().rev().zip([8, 62, 101, 181, 2]) {
            s.severity_counts.insert(*b, n);
        }
        s.n_agg_cum = 354;
        s.n_raw_cum = 354;
        s.status_counts.insert(Status::Open, 354);
        s.check_identities().unwrap();
    }

    #[test]
    fn new_findings_match_aggregate_delta() {
        let mut a = blank(date(2023, 1, 16));
        let mut b = blank(date(2023, 1, 23));
        a.n_agg_cum = 381;
        b.n_agg_cum = 393;
        b.n_new_7d = 12;
        check_new_findings(&a, &b).unwrap();
        check_monotone(&a, &b).unwrap();
        assert!(check_monotone(&b, &a).is_err());
    }
}
