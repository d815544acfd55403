//! Read models assembled from a committed store: finding lists, the
//! per-finding page and role dashboards.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::document::{AggregateCluster, Store, StoreExt};
use crate::kb::BeliefId;
use crate::lifecycle::StatusChange;
use crate::metrics::weekly_snapshot;
use crate::model::{AggId, AggregatedFinding, RawFinding, RawId, Score, SeverityBand, SeverityLevel, Status, Timestamp};
use crate::scoring::{PriorityAssignment, SeverityAssessment};

pub const NEW_WINDOW_DAYS: i64 = 7;

/// Joins a cluster with its notes, severity and priority.
pub fn assemble(store: &Store, c: &AggregateCluster) -> AggregatedFinding {
    let severity = store.severity(&c.agg_id);
    let priority = store.priority(&c.agg_id);
    let level = severity.map(|s| s.level).unwrap_or_else(|| SeverityLevel::from_score(Score::ZERO));
    AggregatedFinding {
        agg_id: c.agg_id.clone(),
        project_id: c.project_id.clone(),
        member_raw_ids: c.members.keys().cloned().collect(),
        canonical_title: c.canonical_title.clone(),
        canonical_description: c.canonical_description.clone(),
        rule_id: c.rule_id.clone(),
        tool: c.tool.clone(),
        location: c.location.clone(),
        cwe_ids: c.cwe_ids.clone(),
        cve_ids: c.cve_ids.clone(),
        enrichment_notes: store.notes(&c.agg_id).map(|n| n.notes.clone()).unwrap_or_default(),
        severity: level,
        priority: priority.map(|p| p.value),
        priority_set_by: priority.map(|p| p.actor.clone()),
        suggested_priority: severity.map_or(level.score, |s| s.suggested_priority),
        first_seen: c.first_seen,
    }
}

pub fn aggregated_findings(store: &Store) -> Vec<AggregatedFinding> {
    store.aggregates().into_iter().map(|c| assemble(store, c)).collect()
}

/// Effective priority, then suggestion, both descending, then id.
pub fn priority_order(a: &AggregatedFinding, b: &AggregatedFinding) -> Ordering {
    b.effective_priority()
        .cmp(&a.effective_priority())
        .then(b.suggested_priority.cmp(&a.suggested_priority))
        .then(a.agg_id.cmp(&b.agg_id))
}

pub fn top_priority(store: &Store, n: usize) -> Vec<AggregatedFinding> {
    let mut all = aggregated_findings(store);
    all.sort_by(priority_order);
    all.truncate(n);
    all
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FindingFilter {
    /// Any of these; empty means all.
    pub status: Vec<Status>,
    pub severity: Vec<SeverityBand>,
    pub tool: Option<String>,
    /// First seen at or after.
    pub new_since: Option<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    Severity,
    Priority,
    FirstSeen,
    LastSeen,
}

impl FromStr for SortKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "severity" => Ok(SortKey::Severity),
            "priority" => Ok(SortKey::Priority),
            "first_seen" => Ok(SortKey::FirstSeen),
            "last_seen" => Ok(SortKey::LastSeen),
            _ => Err(format!("unknown sort key `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    Asc,
    Desc,
}

impl FromStr for SortOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "asc" => Ok(SortOrder::Asc),
            "desc" => Ok(SortOrder::Desc),
            _ => Err(format!("unknown order `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    #[serde(flatten)]
    pub finding: AggregatedFinding,
    pub effective_priority: Score,
    pub status_counts: BTreeMap<Status, u32>,
    pub last_seen: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationRow {
    #[serde(flatten)]
    pub raw: RawFinding,
    pub agg_id: Option<AggId>,
    pub severity: Option<SeverityLevel>,
    pub effective_priority: Option<Score>,
}

fn sort_rows<T>(rows: &mut [T], key: impl Fn(&T) -> (i64, &str), order: SortOrder) {
    rows.sort_by(|a, b| {
        let (ka, ia) = key(a);
        let (kb, ib) = key(b);
        let primary = match order {
            SortOrder::Asc => ka.cmp(&kb),
            SortOrder::Desc => kb.cmp(&ka),
        };
        primary.then(ia.cmp(ib))
    });
}

/// Aggregated findings; a status filter matches when any member has it.
pub fn list_aggregated(store: &Store, filter: &FindingFilter, sort: SortKey, order: SortOrder) -> Vec<AggregateRow> {
    let raws: BTreeMap<&RawId, &RawFinding> = store.raw_findings().into_iter().map(|f| (&f.raw_id, f)).collect();
    let mut rows: Vec<AggregateRow> = store
        .aggregates()
        .into_iter()
        .map(|c| {
            let finding = assemble(store, c);
            let members: Vec<&RawFinding> = c.members.keys().filter_map(|r| raws.get(r).copied()).collect();
            let mut status_counts = BTreeMap::new();
            for m in &members {
                *status_counts.entry(m.status).or_insert(0) += 1;
            }
            AggregateRow {
                effective_priority: finding.effective_priority(),
                last_seen: members.iter().map(|m| m.last_seen).max().unwrap_or(c.first_seen),
                status_counts,
                finding,
            }
        })
        .filter(|r| filter.status.is_empty() || filter.status.iter().any(|s| r.status_counts.contains_key(s)))
        .filter(|r| filter.severity.is_empty() || filter.severity.contains(&r.finding.severity.band))
        .filter(|r| filter.tool.as_ref().is_none_or(|t| &r.finding.tool.name == t))
        .filter(|r| filter.new_since.is_none_or(|t| r.finding.first_seen >= t))
        .collect();
    match sort {
        // Priority ties fall back to the suggestion, like `top_priority`.
        SortKey::Priority => {
            rows.sort_by(|a, b| priority_order(&a.finding, &b.finding));
            if order == SortOrder::Asc {
                rows.reverse();
            }
        }
        SortKey::Severity => sort_rows(&mut rows, |r| (r.finding.severity.score.tenths().into(), r.finding.agg_id.as_str()), order),
        SortKey::FirstSeen => sort_rows(&mut rows, |r| (r.finding.first_seen.timestamp(), r.finding.agg_id.as_str()), order),
        SortKey::LastSeen => sort_rows(&mut rows, |r| (r.last_seen.timestamp(), r.finding.agg_id.as_str()), order),
    }
    rows
}

/// One row per raw finding (location).
pub fn list_locations(store: &Store, filter: &FindingFilter, sort: SortKey, order: SortOrder) -> Vec<LocationRow> {
    let membership = store.membership();
    let mut rows: Vec<LocationRow> = store
        .raw_findings()
        .into_iter()
        .map(|f| {
            let agg = membership.get(&f.raw_id).map(|a| (*a).clone());
            let severity = agg.as_ref().and_then(|a| store.severity(a));
            let priority = agg.as_ref().and_then(|a| store.priority(a)).map(|p| p.value);
            LocationRow {
                severity: severity.map(|s| s.level),
                effective_priority: priority.or(severity.map(|s| s.suggested_priority)),
                agg_id: agg,
                raw: f.clone(),
            }
        })
        .filter(|r| filter.status.is_empty() || filter.status.contains(&r.raw.status))
        .filter(|r| filter.severity.is_empty() || r.severity.is_some_and(|s| filter.severity.contains(&s.band)))
        .filter(|r| filter.tool.as_ref().is_none_or(|t| &r.raw.tool.name == t))
        .filter(|r| filter.new_since.is_none_or(|t| r.raw.first_seen >= t))
        .collect();
    let key = |r: &LocationRow| -> i64 {
        match sort {
            SortKey::Severity => r.severity.map_or(-1, |s| s.score.tenths().into()),
            SortKey::Priority => r.effective_priority.map_or(-1, |s| s.tenths().into()),
            SortKey::FirstSeen => r.raw.first_seen.timestamp(),
            SortKey::LastSeen => r.raw.last_seen.timestamp(),
        }
    };
    sort_rows(&mut rows, |r| (key(r), r.raw.raw_id.as_str()), order);
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingDetail {
    pub aggregate: AggregatedFinding,
    /// Set when the page was requested through a raw id.
    pub focus: Option<RawId>,
    pub members: Vec<RawFinding>,
    pub audit: Vec<StatusChange>,
    pub severity: Option<SeverityAssessment>,
    pub priority: Option<PriorityAssignment>,
    /// Beliefs the aggregate was derived from.
    pub provenance: Vec<BeliefId>,
}

/// Detail page for an aggregate id or a raw id.
pub fn detail(store: &Store, id: &str) -> Option<FindingDetail> {
    let (agg_id, focus) = match store.aggregate(&AggId::new(id)) {
        Some(c) => (c.agg_id.clone(), None),
        None => {
            let raw = store.raw_finding(&RawId::new(id))?;
            let membership = store.membership();
            ((*membership.get(&raw.raw_id)?).clone(), Some(raw.raw_id.clone()))
        }
    };
    let c = store.aggregate(&agg_id)?;
    let members: Vec<RawFinding> = c.members.keys().filter_map(|r| store.raw_finding(r)).cloned().collect();
    let audit = store
        .status_changes()
        .into_iter()
        .filter(|s| c.members.contains_key(&s.raw_id))
        .cloned()
        .collect();
    Some(FindingDetail {
        aggregate: assemble(store, c),
        focus,
        members,
        audit,
        severity: store.severity(&agg_id).cloned(),
        priority: store.priority(&agg_id).cloned(),
        provenance: store
            .get_str(agg_id.as_str())
            .map(|b| b.derived_from.iter().cloned().collect())
            .unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Developer,
    Manager,
    Security,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "developer" => Ok(Role::Developer),
            "manager" => Ok(Role::Manager),
            "security" => Ok(Role::Security),
            _ => Err(format!("unknown role `{s}`")),
        }
    }
}

fn is_open_like(s: Status) -> bool {
    matches!(s, Status::Open | Status::InWork | Status::OnHold)
}

/// Widgets for a role at time `now`.
pub fn dashboard(store: &Store, project_id: &str, role: Role, now: Timestamp) -> Value {
    let since = now - chrono::Duration::days(NEW_WINDOW_DAYS);
    let widgets = match role {
        Role::Developer => {
            let filter = FindingFilter {
                status: vec![Status::Open, Status::InWork, Status::OnHold],
                ..Default::default()
            };
            let rows = list_aggregated(store, &filter, SortKey::Priority, SortOrder::Desc);
            let newest: Vec<Value> = rows
                .iter()
                .filter(|r| r.finding.first_seen >= since)
                .take(10)
                .map(|r| json!({"agg_id": r.finding.agg_id, "title": r.finding.canonical_title, "severity": r.finding.severity}))
                .collect();
            let solutions: Vec<Value> = rows
                .iter()
                .take(10)
                .map(|r| {
                    json!({
                        "agg_id": r.finding.agg_id,
                        "title": r.finding.canonical_title,
                        "location": r.finding.location,
                        "effective_priority": r.effective_priority,
                        "notes": r.finding.enrichment_notes,
                    })
                })
                .collect();
            json!({"newest_findings": newest, "solutions": solutions})
        }
        Role::Manager => {
            let today = now.date_naive();
            let trend: Vec<Value> = (0..8)
                .rev()
                .map(|w| {
                    let s = weekly_snapshot(store, project_id, today - chrono::Duration::weeks(w));
                    json!({
                        "as_of": s.as_of,
                        "open": s.status_counts.get(&Status::Open).copied().unwrap_or(0),
                        "n_raw_cum": s.n_raw_cum,
                        "n_agg_cum": s.n_agg_cum,
                        "n_new_7d": s.n_new_7d,
                    })
                })
                .collect();
            json!({"weekly_trend": trend, "current": weekly_snapshot(store, project_id, today)})
        }
        Role::Security => {
            let mut severity: BTreeMap<SeverityBand, u64> = SeverityBand::ALL.iter().map(|b| (*b, 0)).collect();
            for f in aggregated_findings(store) {
                *severity.entry(f.severity.band).or_default() += 1;
            }
            let mut status: BTreeMap<Status, u64> = Status::ALL.iter().map(|s| (*s, 0)).collect();
            let raws = store.raw_findings();
            for f in &raws {
                *status.entry(f.status).or_default() += 1;
            }
            let top: Vec<Value> = top_priority(store, 10)
                .iter()
                .map(|f| json!({"agg_id": f.agg_id, "title": f.canonical_title, "effective_priority": f.effective_priority()}))
                .collect();
            json!({
                "severity_distribution": severity,
                "status_breakdown": status,
                "open_locations": raws.iter().filter(|f| is_open_like(f.status)).count(),
                "top_priority": top,
                "quarantined": store.quarantined(),
            })
        }
    };
    json!({"project_id": project_id, "role": role, "generated_at": now, "widgets": widgets})
}
