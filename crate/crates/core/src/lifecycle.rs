//! Occurrence history and the status state machine of raw findings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::LifecycleError;
use crate::model::{FindingDraft, RawFinding, RawId, ReportId, ScopeKey, SetBy, Status, Timestamp};

pub const SYSTEM_ACTOR: &str = "system";

/// How many consecutive absent reports each status tolerates before the
/// finding is marked `Disappeared`. Statuses not listed here are permanent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatusPolicy {
    pub open_absent_reports: u32,
    pub in_work_absent_reports: u32,
    pub on_hold_absent_reports: u32,
    pub solved_absent_reports: u32,
}

impl Default for StatusPolicy {
    fn default() -> Self {
        Self {
            open_absent_reports: 1,
            in_work_absent_reports: 2,
            on_hold_absent_reports: 2,
            solved_absent_reports: 1,
        }
    }
}

impl StatusPolicy {
    /// Transition after the finding missed `absences` consecutive reports.
    pub fn on_absent(&self, status: Status, absences: u32) -> Option<Status> {
        let limit = match status {
            Status::Open => self.open_absent_reports,
            Status::InWork => self.in_work_absent_reports,
            Status::OnHold => self.on_hold_absent_reports,
            Status::Solved => self.solved_absent_reports,
            Status::FalsePositive | Status::Invalid | Status::Accepted | Status::Disappeared => return None,
        };
        (absences >= limit.max(1)).then_some(Status::Disappeared)
    }

    /// Whether absences can move this status at all.
    pub fn tracks_absence(&self, status: Status) -> bool {
        matches!(status, Status::Open | Status::InWork | Status::OnHold | Status::Solved)
    }

    /// Transition when the finding shows up in a report.
    pub fn on_present(&self, status: Status) -> Option<Status> {
        matches!(status, Status::Disappeared | Status::Solved).then_some(Status::Open)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub raw_id: RawId,
    /// `None` when the finding was just created.
    pub old: Option<Status>,
    pub new: Status,
    pub set_by: SetBy,
    pub actor: String,
}

/// An audit entry. `seq` numbers entries in commit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusChange {
    pub seq: u64,
    pub at: Timestamp,
    pub raw_id: RawId,
    pub old: Option<Status>,
    pub new: Status,
    pub actor: String,
    pub set_by: SetBy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_id: Option<ReportId>,
}

/// Report fields the history needs.
#[derive(Debug, Clone, Copy)]
pub struct Occurrence<'a> {
    pub report_id: &'a ReportId,
    pub received_at: Timestamp,
    pub scope: &'a ScopeKey,
}

/// Creates or updates the finding for one report occurrence. Returns the
/// creation transition for new findings.
pub fn record_occurrences(existing: Option<RawFinding>, draft: &FindingDraft, occ: Occurrence<'_>) -> (RawFinding, Option<Transition>) {
    match existing {
        Some(mut f) => {
            if !f.report_ids.contains(occ.report_id) {
                f.report_ids.push(occ.report_id.clone());
                f.occurrence_count += 1;
            }
            f.last_seen = f.last_seen.max(occ.received_at);
            f.first_seen = f.first_seen.min(occ.received_at);
            f.absence_count = 0;
            f.sources.insert(occ.scope.clone());
            // Mutable metadata follows the newest report.
            f.location.line = draft.location.line;
            f.title.clone_from(&draft.title);
            f.description.clone_from(&draft.description);
            f.severity_raw.clone_from(&draft.severity_raw);
            f.cvss = draft.cvss;
            f.fixed_version.clone_from(&draft.fixed_version);
            (f, None)
        }
        None => {
            let f = RawFinding {
                raw_id: draft.raw_id.clone(),
                project_id: draft.project_id.clone(),
                tool: draft.tool.clone(),
                rule_id: draft.rule_id.clone(),
                title: draft.title.clone(),
                description: draft.description.clone(),
                location: draft.location.clone(),
                severity_raw: draft.severity_raw.clone(),
                cvss: draft.cvss,
                cwe_ids: draft.cwe_ids.clone(),
                cve_ids: draft.cve_ids.clone(),
                fixed_version: draft.fixed_version.clone(),
                status: Status::Open,
                status_set_by: SetBy::System,
                first_seen: occ.received_at,
                last_seen: occ.received_at,
                occurrence_count: 1,
                report_ids: vec![occ.report_id.clone()],
                absence_count: 0,
                sources: BTreeSet::from([occ.scope.clone()]),
            };
            let t = Transition {
                raw_id: f.raw_id.clone(),
                old: None,
                new: Status::Open,
                set_by: SetBy::System,
                actor: SYSTEM_ACTOR.into(),
            };
            (f, Some(t))
        }
    }
}

fn system_transition(f: &mut RawFinding, new: Status) -> Transition {
    let t = Transition {
        raw_id: f.raw_id.clone(),
        old: Some(f.status),
        new,
        set_by: SetBy::System,
        actor: SYSTEM_ACTOR.into(),
    };
    f.status = new;
    f.status_set_by = SetBy::System;
    t
}

/// Handles a finding that was attested by `scope` but is missing from its
/// newest report. Findings from other scopes must not be passed in.
pub fn apply_absence_transitions(f: &mut RawFinding, scope: &ScopeKey, policy: &StatusPolicy) -> Option<Transition> {
    debug_assert!(f.sources.contains(scope));
    if !policy.tracks_absence(f.status) {
        return None;
    }
    f.absence_count += 1;
    let new = policy.on_absent(f.status, f.absence_count)?;
    Some(system_transition(f, new))
}

/// Reopens a `Disappeared` or `Solved` finding that showed up again.
pub fn reopen_on_reappearance(f: &mut RawFinding, policy: &StatusPolicy) -> Option<Transition> {
    f.absence_count = 0;
    let new = policy.on_present(f.status)?;
    Some(system_transition(f, new))
}

/// A user status change. `Disappeared` is reserved for the system.
/// Returns `None` if nothing changed.
pub fn set_status(f: &mut RawFinding, status: Status, actor: &str) -> Result<Option<Transition>, LifecycleError> {
    if !status.user_assignable() {
        return Err(LifecycleError::DisappearedNotAssignable);
    }
    if f.status == status && f.status_set_by == SetBy::User {
        return Ok(None);
    }
    let t = Transition {
        raw_id: f.raw_id.clone(),
        old: Some(f.status),
        new: status,
        set_by: SetBy::User,
        actor: actor.to_string(),
    };
    f.status = status;
    f.status_set_by = SetBy::User;
    // Absence is counted from the moment of triage.
    f.absence_count = 0;
    Ok(Some(t))
}

/// Status of a finding as of `cutoff` (exclusive), from its audit entries.
pub fn status_as_of<'a>(changes: impl IntoIterator<Item = &'a StatusChange>, cutoff: Timestamp) -> Option<Status> {
    changes
        .into_iter()
        .filter(|c| c.at < cutoff)
        .max_by_key(|c| (c.at, c.seq))
        .map(|c| c.new)
}

/// Newline-delimited audit export: `{time, raw_id, old, new, actor}` per line.
pub fn audit_ndjson<'a>(changes: impl IntoIterator<Item = &'a StatusChange>) -> String {
    let mut out = String::new();
    for c in changes {
        let line = serde_json::json!({
            "seq": c.seq,
            "time": c.at,
            "raw_id": c.raw_id,
            "old": c.old,
            "new": c.new,
            "actor": c.actor,
            "report_id": c.report_id,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DraftFields, Location, ToolCategory, ToolDescriptor};
    use chrono::{Duration, TimeZone, Utc};

    fn draft() -> FindingDraft {
        let tool = ToolDescriptor::new("t", "1", ToolCategory::StaticAnalysis).unwrap();
        FindingDraft::build(
            "p",
            &tool,
            DraftFields {
                rule_id: "R".into(),
                title: "x".into(),
                location: Some(Location::file("a.rs", Some(3))),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn scope() -> ScopeKey {
        ScopeKey {
            tool: "t".into(),
            scope: "main".into(),
        }
    }

    fn seen_in(n: usize) -> RawFinding {
        let d = draft();
        let s = scope();
        let t0 = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        let mut f = None;
        for i in 0..n {
            let id = ReportId::new(format!("r{i}"));
            let occ = Occurrence {
                report_id: &id,
                received_at: t0 + Duration::days(i as i64),
                scope: &s,
            };
            f = Some(record_occurrences(f, &d, occ).0);
        }
        f.unwrap()
    }

    #[test]
    fn new_finding_is_open_with_one_occurrence() {
        let f = seen_in(1);
        assert_eq!(f.status, Status::Open);
        assert_eq!(f.first_seen, f.last_seen);
        assert_eq!(f.occurrence_count, 1);
        f.check_invariants().unwrap();
    }

    #[test]
    fn two_reports_extend_history() {
        let f = seen_in(2);
        assert_eq!(f.occurrence_count, 2);
        assert_eq!(f.last_seen - f.first_seen, Duration::days(1));
        f.check_invariants().unwrap();
    }

    #[test]
    fn open_disappears_after_one_absence() {
        let mut f = seen_in(1);
        let t = apply_absence_transitions(&mut f, &scope(), &StatusPolicy::default()).unwrap();
        assert_eq!((t.old, t.new), (Some(Status::Open), Status::Disappeared));
        f.check_invariants().unwrap();
    }

    #[test]
    fn in_work_needs_two_consecutive_absences() {
        let p = StatusPolicy::default();
        let mut f = seen_in(1);
        set_status(&mut f, Status::InWork, "dev").unwrap();
        assert!(apply_absence_transitions(&mut f, &scope(), &p).is_none());
        assert_eq!(f.status, Status::InWork);
        // Presence resets the count.
        reopen_on_reappearance(&mut f, &p);
        assert!(apply_absence_transitions(&mut f, &scope(), &p).is_none());
        assert!(apply_absence_transitions(&mut f, &scope(), &p).is_some());
        assert_eq!(f.status, Status::Disappeared);
        assert_eq!(f.status_set_by, SetBy::System);
    }

    #[test]
    fn permanent_statuses_ignore_absence_and_presence() {
        let p = StatusPolicy::default();
        for s in [Status::Accepted, Status::FalsePositive, Status::Invalid] {
            let mut f = seen_in(1);
            set_status(&mut f, s, "dev").unwrap();
            for _ in 0..5 {
                assert!(apply_absence_transitions(&mut f, &scope(), &p).is_none());
            }
            assert!(reopen_on_reappearance(&mut f, &p).is_none());
            assert_eq!(f.status, s);
        }
    }

    #[test]
    fn solved_and_disappeared_reopen() {
        let p = StatusPolicy::default();
        let mut f = seen_in(1);
        set_status(&mut f, Status::Solved, "dev").unwrap();
        assert_eq!(reopen_on_reappearance(&mut f, &p).unwrap().new, Status::Open);
        apply_absence_transitions(&mut f, &scope(), &p);
        assert_eq!(f.status, Status::Disappeared);
        assert_eq!(reopen_on_reappearance(&mut f, &p).unwrap().new, Status::Open);
    }

    #[test]
    fn users_cannot_set_disappeared() {
        let mut f = seen_in(1);
        assert_eq!(
            set_status(&mut f, Status::Disappeared, "dev"),
            Err(LifecycleError::DisappearedNotAssignable)
        );
        assert_eq!(f.status, Status::Open);
    }

    #[test]
    fn repeated_user_write_is_not_a_change() {
        let mut f = seen_in(1);
        assert!(set_status(&mut f, Status::Open, "dev").unwrap().is_some());
        assert!(set_status(&mut f, Status::Open, "dev").unwrap().is_none());
    }

    #[test]
    fn same_report_counted_once() {
        let d = draft();
        let s = scope();
        let id = ReportId::new("r");
        let occ = Occurrence {
            report_id: &id,
            received_at: Utc::now(),
            scope: &s,
        };
        let (f, _) = record_occurrences(None, &d, occ);
        let (f, t) = record_occurrences(Some(f), &d, occ);
        assert!(t.is_none());
        assert_eq!(f.occurrence_count, 1);
    }
}
