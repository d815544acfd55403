//! One project's knowledge base behind a write API.
//!
//! [`Project`] is the single writer: every mutation is turned into
//! external beliefs and committed through the fixpoint. Readers clone a
//! [`SnapshotReader`] and never wait on the writer.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dedup::DedupConfig;
use crate::document::{class, report_belief_id, Document, EnrichmentConfig, Store, StoreExt, UserInput};
use crate::error::{DocumentIssue, IngestError, LifecycleError, ScoringError};
use crate::ingest::{validate_report, AdapterRegistry, UploadMeta};
use crate::kb::{
    BeliefId, ChangeSet, DerivationTrace, DirectoryBackend, KbError, KnowledgeBase, LogRecord, NewBelief, Revision,
};
use crate::lifecycle::{audit_ndjson, StatusPolicy};
use crate::metrics::{weekly_snapshot, WeeklySnapshot};
use crate::model::{AggId, FormatTag, RawId, ReportId, Score, SecurityReport, SeverityBand, Status, Timestamp};
use crate::rules::build_schema;
use crate::views;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectSettings {
    pub dedup: DedupConfig,
    pub lifecycle: StatusPolicy,
    /// Enrichment rule file, re-read before every report.
    pub enrichment_rules: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("unknown format `{tag}` (known: {})", .known.join(", "))]
    UnknownFormat { tag: String, known: Vec<String> },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("report `{0}` already exists")]
    DuplicateReport(ReportId),
    #[error("report received at {received} precedes the latest report ({latest})")]
    OutOfOrder { received: Timestamp, latest: Timestamp },
    #[error("unknown finding or report `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("cannot read enrichment rules {path}: {source}")]
    Rules {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Kb(#[from] KbError),
}

/// Result of one upload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub report_id: ReportId,
    pub new_raw: usize,
    pub new_agg: usize,
    /// Transitions of existing findings; first sightings are not counted.
    pub status_changes: usize,
    /// Entries skipped because they were invalid.
    pub warnings: Vec<DocumentIssue>,
    /// Set when a rule failed and the report was quarantined.
    pub quarantined: Option<String>,
    pub trace: DerivationTrace,
}

/// Result of a status or priority write.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WriteAck {
    pub input_id: Option<BeliefId>,
    /// Locations whose status actually changed.
    pub changed: usize,
    pub trace: DerivationTrace,
}

/// Mass status assignment over aggregates up to a severity band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkStatus {
    pub max_severity: SeverityBand,
    /// Only locations currently in one of these statuses; empty means any.
    #[serde(default)]
    pub from_status: Vec<Status>,
    pub status: Status,
}

/// Cheap handle to the last committed store.
#[derive(Clone)]
pub struct SnapshotReader(Arc<RwLock<Arc<Store>>>);

impl SnapshotReader {
    pub fn load(&self) -> Arc<Store> {
        Arc::clone(&self.0.read().expect("snapshot lock"))
    }
}

pub struct Project {
    id: String,
    kb: KnowledgeBase<Document>,
    registry: Arc<AdapterRegistry>,
    settings: ProjectSettings,
    published: SnapshotReader,
}

#[derive(Clone, Copy)]
struct Counts {
    raw: usize,
    agg: usize,
    changes: usize,
}

fn counts(store: &Store) -> Counts {
    Counts {
        raw: store.count(class::RAW_FINDING),
        agg: store.count(class::AGGREGATE),
        changes: store.count(class::STATUS_CHANGE),
    }
}

/// Non-creation status changes with sequence above `after`.
fn transitions_since(store: &Store, after: usize) -> usize {
    store
        .status_changes()
        .into_iter()
        .filter(|c| c.seq as usize > after && c.old.is_some())
        .count()
}

impl Project {
    pub fn in_memory(id: impl Into<String>, settings: ProjectSettings) -> Result<Self, ProjectError> {
        let registry = Arc::new(AdapterRegistry::default());
        let schema = build_schema(Arc::clone(&registry), settings.dedup, settings.lifecycle)?;
        Ok(Self::assemble(id.into(), KnowledgeBase::new(schema), registry, settings))
    }

    /// Opens or creates a project persisted under `dir`.
    pub fn open(id: impl Into<String>, settings: ProjectSettings, dir: impl AsRef<Path>) -> Result<Self, ProjectError> {
        let registry = Arc::new(AdapterRegistry::default());
        let schema = build_schema(Arc::clone(&registry), settings.dedup, settings.lifecycle)?;
        let backend = DirectoryBackend::open(dir.as_ref()).map_err(KbError::from)?;
        let kb = KnowledgeBase::open(schema, Box::new(backend))?;
        Ok(Self::assemble(id.into(), kb, registry, settings))
    }

    fn assemble(id: String, kb: KnowledgeBase<Document>, registry: Arc<AdapterRegistry>, settings: ProjectSettings) -> Self {
        let published = SnapshotReader(Arc::new(RwLock::new(kb.committed())));
        Self {
            id,
            kb,
            registry,
            settings,
            published,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn registry(&self) -> &AdapterRegistry {
        &self.registry
    }

    pub fn reader(&self) -> SnapshotReader {
        self.published.clone()
    }

    pub fn snapshot(&self) -> Arc<Store> {
        self.kb.committed()
    }

    fn publish(&self) {
        *self.published.0.write().expect("snapshot lock") = self.kb.committed();
    }

    /// Validates, stores and derives a report.
    ///
    /// `format` is a format tag; `None` detects it from the document.
    pub fn ingest(&mut self, document: &[u8], format: Option<&str>, meta: UploadMeta) -> Result<IngestSummary, ProjectError> {
        let declared = match format {
            None => None,
            Some(tag) => Some(FormatTag::from_str(tag).map_err(|_| ProjectError::UnknownFormat {
                tag: tag.to_string(),
                known: self.registry.tags().into_iter().map(String::from).collect(),
            })?),
        };
        let mut meta = meta;
        meta.project_id.clone_from(&self.id);
        let report = validate_report(&self.registry, document, declared, &meta)?;
        let store = self.kb.store();
        if store.contains(&report_belief_id(&report.report_id)) {
            return Err(ProjectError::DuplicateReport(report.report_id));
        }
        if let Some(latest) = store.reports().iter().map(|r| r.received_at).max() {
            if report.received_at < latest {
                return Err(ProjectError::OutOfOrder {
                    received: report.received_at,
                    latest,
                });
            }
        }
        // Parsing again inside the rule is cheap; doing it here lets a
        // report with no valid entries be refused before it is stored.
        let outcome = self.registry.parse_report(&report)?;

        let mut batch = Vec::new();
        if let Some(cfg) = self.changed_enrichment_config()? {
            let id = format!("enrichment-{}", self.kb.store().next_seq());
            batch.push(NewBelief::new(id, class::ENRICHMENT_CONFIG, Document::EnrichmentConfig(cfg), report.received_at));
        }
        let report_id = report.report_id.clone();
        let at = report.received_at;
        batch.push(NewBelief::new(
            report_belief_id(&report_id).0,
            class::SECURITY_REPORT,
            Document::Report(report),
            at,
        ));

        let before = counts(self.kb.store());
        let result = self.kb.commit(batch);
        self.publish();
        let after = counts(self.kb.store());
        let (trace, quarantined) = match result {
            Ok(t) => (t, None),
            Err(KbError::RuleFailed { rule, message, .. }) => (DerivationTrace::default(), Some(format!("rule `{rule}` failed: {message}"))),
            Err(e) => return Err(e.into()),
        };
        Ok(IngestSummary {
            report_id,
            new_raw: after.raw - before.raw,
            new_agg: after.agg - before.agg,
            status_changes: transitions_since(self.kb.store(), before.changes),
            warnings: outcome.rejected,
            quarantined,
            trace,
        })
    }

    fn changed_enrichment_config(&self) -> Result<Option<EnrichmentConfig>, ProjectError> {
        let Some(path) = &self.settings.enrichment_rules else { return Ok(None) };
        let source = std::fs::read_to_string(path).map_err(|source| ProjectError::Rules {
            path: path.clone(),
            source,
        })?;
        let current = self.kb.store().enrichment_config().and_then(|(_, c)| c.source.clone());
        Ok((current.as_deref() != Some(source.as_str())).then_some(EnrichmentConfig { source: Some(source) }))
    }

    /// Replaces the enrichment rules directly, without a report.
    pub fn set_enrichment_rules(&mut self, source: Option<String>, at: Timestamp) -> Result<DerivationTrace, ProjectError> {
        let id = format!("enrichment-{}", self.kb.store().next_seq());
        let b = NewBelief::new(id, class::ENRICHMENT_CONFIG, Document::EnrichmentConfig(EnrichmentConfig { source }), at);
        self.commit_one(b)
    }

    fn commit_one(&mut self, b: NewBelief<Document>) -> Result<DerivationTrace, ProjectError> {
        let result = self.kb.commit(vec![b]);
        self.publish();
        Ok(result?)
    }

    /// Raw ids behind a raw or aggregate id.
    pub fn resolve(&self, id: &str) -> Result<Vec<RawId>, ProjectError> {
        let store = self.kb.store();
        if let Some(c) = store.aggregate(&AggId::new(id)) {
            return Ok(c.members.keys().cloned().collect());
        }
        if store.raw_finding(&RawId::new(id)).is_some() {
            return Ok(vec![RawId::new(id)]);
        }
        Err(ProjectError::NotFound(id.to_string()))
    }

    /// Sets the status of a location, or of every location of an aggregate.
    pub fn set_status(&mut self, id: &str, status: Status, actor: &str, at: Timestamp) -> Result<WriteAck, ProjectError> {
        if !status.user_assignable() {
            return Err(LifecycleError::DisappearedNotAssignable.into());
        }
        let raw_ids = self.resolve(id)?;
        self.submit_status(raw_ids, status, actor, at)
    }

    pub fn bulk_status(&mut self, req: &BulkStatus, actor: &str, at: Timestamp) -> Result<WriteAck, ProjectError> {
        if !req.status.user_assignable() {
            return Err(LifecycleError::DisappearedNotAssignable.into());
        }
        let store = self.kb.store();
        let raw_ids: Vec<RawId> = views::aggregated_findings(store)
            .into_iter()
            .filter(|f| f.severity.band <= req.max_severity)
            .flat_map(|f| f.member_raw_ids)
            .filter(|r| {
                req.from_status.is_empty() || store.raw_finding(r).is_some_and(|f| req.from_status.contains(&f.status))
            })
            .collect();
        self.submit_status(raw_ids, req.status, actor, at)
    }

    fn submit_status(&mut self, raw_ids: Vec<RawId>, status: Status, actor: &str, at: Timestamp) -> Result<WriteAck, ProjectError> {
        if raw_ids.is_empty() {
            return Ok(WriteAck {
                input_id: None,
                changed: 0,
                trace: DerivationTrace::default(),
            });
        }
        let input = UserInput::SetStatus {
            raw_ids,
            status,
            actor: actor.to_string(),
            at,
        };
        self.submit(input, at)
    }

    pub fn set_priority(&mut self, agg_id: &str, value: f64, actor: &str, at: Timestamp) -> Result<WriteAck, ProjectError> {
        let value = Score::new(value).map_err(|_| ScoringError::PriorityOutOfRange(value))?;
        if self.kb.store().aggregate(&AggId::new(agg_id)).is_none() {
            return Err(ProjectError::NotFound(agg_id.to_string()));
        }
        let input = UserInput::SetPriority {
            agg_id: AggId::new(agg_id),
            value,
            actor: actor.to_string(),
            at,
        };
        self.submit(input, at)
    }

    fn submit(&mut self, input: UserInput, at: Timestamp) -> Result<WriteAck, ProjectError> {
        let id = BeliefId::new(format!("input-{}", self.kb.store().next_seq()));
        let before = self.kb.store().count(class::STATUS_CHANGE);
        let trace = self.commit_one(NewBelief {
            id: id.clone(),
            class: class::USER_INPUT.to_string(),
            payload: Document::UserInput(input),
            asserted_at: at,
        })?;
        Ok(WriteAck {
            input_id: Some(id),
            changed: transitions_since(self.kb.store(), before),
            trace,
        })
    }

    /// Withdraws a report and everything derived from it.
    pub fn retract_report(&mut self, report_id: &str, at: Timestamp) -> Result<ChangeSet, ProjectError> {
        let id = report_belief_id(&ReportId::new(report_id));
        if !self.kb.store().contains(&id) {
            return Err(ProjectError::NotFound(report_id.to_string()));
        }
        let cs = self.kb.revise(&id, Revision::Retract { at });
        self.publish();
        Ok(cs?)
    }

    /// Replaces the document of a stored report, keeping its id, tool,
    /// scope and receive time.
    pub fn revise_report(&mut self, report_id: &str, document: &[u8], at: Timestamp) -> Result<ChangeSet, ProjectError> {
        let id = report_belief_id(&ReportId::new(report_id));
        let old: SecurityReport = self
            .kb
            .store()
            .get(&id)
            .and_then(|b| b.payload.as_report())
            .cloned()
            .ok_or_else(|| ProjectError::NotFound(report_id.to_string()))?;
        let meta = UploadMeta {
            project_id: old.project_id.clone(),
            report_id: Some(old.report_id.clone()),
            tool: Some(old.tool.clone()),
            scan_scope: Some(old.scan_scope.clone()),
            commit_ref: old.commit_ref.clone(),
            received_at: old.received_at,
        };
        let report = validate_report(&self.registry, document, Some(old.format_tag), &meta)?;
        self.registry.parse_report(&report)?;
        let cs = self.kb.revise(
            &id,
            Revision::Replace {
                payload: Document::Report(report),
                at,
            },
        );
        self.publish();
        Ok(cs?)
    }

    pub fn query(&self, name: &str, params: &Value) -> Result<Value, ProjectError> {
        Ok(self.kb.evaluate_query(name, params)?)
    }

    pub fn weekly(&self, as_of: NaiveDate) -> WeeklySnapshot {
        weekly_snapshot(&self.kb.committed(), &self.id, as_of)
    }

    /// Status changes as NDJSON.
    pub fn audit(&self) -> String {
        audit_ndjson(self.kb.committed().status_changes())
    }

    pub fn export_log(&self) -> Result<Vec<LogRecord<Document>>, ProjectError> {
        Ok(self.kb.export_log()?)
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase<Document> {
        &self.kb
    }
}

#[cfg(test)]
mod tests {
    use chrono::{TimeZone, Utc};
    use serde_json::json;

    use super::*;

    fn t(day: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2023, 1, day, 12, 0, 0).unwrap()
    }

    fn native(entries: &[(&str, &str)]) -> Vec<u8> {
        let findings: Vec<Value> = entries
            .iter()
            .map(|(rule, path)| {
                json!({"rule_id": rule, "title": format!("{rule} issue"), "location": {"path": path}, "severity_raw": "high"})
            })
            .collect();
        serde_json::to_vec(&json!({
            "schema_version": "1",
            "tool": {"name": "scanner", "category": "static-analysis"},
            "findings": findings,
        }))
        .unwrap()
    }

    fn project() -> Project {
        Project::in_memory("demo", ProjectSettings::default()).unwrap()
    }

    #[test]
    fn ingest_counts_new_findings() {
        let mut p = project();
        let s = p
            .ingest(&native(&[("a", "x.rs"), ("b", "y.rs"), ("c", "z.rs")]), Some("native"), UploadMeta::new("demo", t(2)))
            .unwrap();
        assert_eq!(s.new_raw, 3);
        assert_eq!(s.status_changes, 0);
        assert!(s.quarantined.is_none());
        assert_eq!(p.reader().load().count(class::RAW_FINDING), 3);
    }

    #[test]
    fn duplicate_and_unknown_format_are_refused() {
        let mut p = project();
        let doc = native(&[("a", "x.rs")]);
        p.ingest(&doc, None, UploadMeta::new("demo", t(2))).unwrap();
        let version = p.snapshot().version();
        let err = p.ingest(&doc, None, UploadMeta::new("demo", t(2))).unwrap_err();
        assert!(matches!(err, ProjectError::DuplicateReport(_)));
        assert_eq!(p.snapshot().version(), version);
        let err = p.ingest(&doc, Some("pdf"), UploadMeta::new("demo", t(3))).unwrap_err();
        assert!(matches!(err, ProjectError::UnknownFormat { .. }));
    }

    #[test]
    fn out_of_order_reports_are_refused() {
        let mut p = project();
        p.ingest(&native(&[("a", "x.rs")]), None, UploadMeta::new("demo", t(5))).unwrap();
        let err = p.ingest(&native(&[("b", "x.rs")]), None, UploadMeta::new("demo", t(4))).unwrap_err();
        assert!(matches!(err, ProjectError::OutOfOrder { .. }));
    }

    #[test]
    fn absence_is_reported_as_a_status_change() {
        let mut p = project();
        p.ingest(&native(&[("a", "x.rs"), ("b", "y.rs")]), None, UploadMeta::new("demo", t(2))).unwrap();
        let s = p.ingest(&native(&[("a", "x.rs")]), None, UploadMeta::new("demo", t(3))).unwrap();
        assert_eq!((s.new_raw, s.status_changes), (0, 1));
    }

    #[test]
    fn disappeared_cannot_be_set() {
        let mut p = project();
        p.ingest(&native(&[("a", "x.rs")]), None, UploadMeta::new("demo", t(2))).unwrap();
        let raw = p.snapshot().raw_findings()[0].raw_id.clone();
        let err = p.set_status(raw.as_str(), Status::Disappeared, "ann", t(3)).unwrap_err();
        assert!(matches!(err, ProjectError::Lifecycle(LifecycleError::DisappearedNotAssignable)));
        let ack = p.set_status(raw.as_str(), Status::InWork, "ann", t(3)).unwrap();
        assert_eq!(ack.changed, 1);
        assert!(matches!(p.set_status("nope", Status::Open, "ann", t(3)), Err(ProjectError::NotFound(_))));
    }

    #[test]
    fn priority_range_and_target_are_checked() {
        let mut p = project();
        p.ingest(&native(&[("a", "x.rs")]), None, UploadMeta::new("demo", t(2))).unwrap();
        let agg = p.snapshot().aggregates()[0].agg_id.clone();
        assert!(matches!(p.set_priority(agg.as_str(), 11.0, "ann", t(3)), Err(ProjectError::Scoring(_))));
        assert!(matches!(p.set_priority("agg-999999", 5.0, "ann", t(3)), Err(ProjectError::NotFound(_))));
        p.set_priority(agg.as_str(), 8.5, "ann", t(3)).unwrap();
        assert_eq!(p.snapshot().priority(&agg).unwrap().value, Score::new(8.5).unwrap());
    }

    #[test]
    fn reader_sees_only_committed_state() {
        let mut p = project();
        let reader = p.reader();
        let before = reader.load();
        p.ingest(&native(&[("a", "x.rs")]), None, UploadMeta::new("demo", t(2))).unwrap();
        assert_eq!(before.count(class::RAW_FINDING), 0);
        assert_eq!(reader.load().count(class::RAW_FINDING), 1);
    }
}
