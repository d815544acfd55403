//! The derivation rules of the triage knowledge base.
//!
//! | stratum | rule        | triggers                          | produces                              |
//! |---------|-------------|-----------------------------------|---------------------------------------|
//! | 1       | `parse`     | SecurityReport                    | ParsedReport                          |
//! | 2       | `dedup`     | ParsedReport                      | AggregatedFinding, SemanticIndex      |
//! | 3       | `enrich`    | AggregatedFinding, EnrichmentConfig | EnrichmentNotes                     |
//! | 4       | `lifecycle` | ParsedReport, UserInput           | RawFinding, StatusChange              |
//! | 5       | `scoring`   | AggregatedFinding, UserInput      | SeverityAssessment, PriorityAssignment |
//!
//! `dedup`, `lifecycle` and `scoring` also read their own earlier output.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::dedup::{term_counts, DedupConfig, TermCounts};
use crate::document::{
    change_belief_id, class, notes_belief_id, parsed_belief_id, priority_belief_id, severity_belief_id, AggregateCluster,
    Document, EnrichmentNotes, ParsedReport, Store, StoreExt, UserInput, SEMANTIC_INDEX_ID,
};
use crate::enrich::{enrich_notes, load_rules, FindingFields};
use crate::ingest::AdapterRegistry;
use crate::kb::{Belief, BeliefId, Derivation, KbError, Rule, RuleError, Schema};
use crate::lifecycle::{
    apply_absence_transitions, record_occurrences, reopen_on_reappearance, set_status, Occurrence, StatusChange,
    StatusPolicy, Transition,
};
use crate::model::{AggId, FindingDraft, RawFinding, RawId, ReportId, ScopeKey, Timestamp};
use crate::scoring::{compute_severity, refine_priority, MemberEvidence};

pub struct ParseRule {
    registry: Arc<AdapterRegistry>,
}

impl ParseRule {
    pub fn new(registry: Arc<AdapterRegistry>) -> Self {
        Self { registry }
    }
}

impl Rule<Document> for ParseRule {
    fn name(&self) -> &'static str {
        "parse"
    }

    fn stratum(&self) -> u32 {
        1
    }

    fn triggers(&self) -> &'static [&'static str] {
        &[class::SECURITY_REPORT]
    }

    fn produces(&self) -> &'static [&'static str] {
        &[class::PARSED_REPORT]
    }

    fn fire(&self, inputs: &[&Belief<Document>], _: &Store) -> Result<Vec<Derivation<Document>>, RuleError> {
        let mut out = Vec::new();
        for b in inputs {
            let Some(report) = b.payload.as_report() else { continue };
            let outcome = self.registry.parse_report(report).map_err(RuleError::new)?;
            out.push(Derivation {
                id: parsed_belief_id(&report.report_id),
                class: class::PARSED_REPORT,
                payload: Document::Parsed(ParsedReport {
                    report_id: report.report_id.clone(),
                    project_id: report.project_id.clone(),
                    tool: report.tool.clone(),
                    scan_scope: report.scan_scope.clone(),
                    received_at: report.received_at,
                    groups: crate::dedup::exact_group(outcome.drafts),
                    rejected: outcome.rejected,
                    entry_count: outcome.entry_count,
                }),
                derived_from: BTreeSet::from([b.id.clone()]),
            });
        }
        Ok(out)
    }
}

pub struct DedupRule {
    config: DedupConfig,
}

impl DedupRule {
    pub fn new(config: DedupConfig) -> Self {
        Self { config }
    }
}

fn evidence(d: &FindingDraft) -> MemberEvidence {
    MemberEvidence {
        score: d.severity.score,
        unscored: d.severity.unscored,
        has_fix: d.fixed_version.is_some(),
    }
}

fn new_cluster(agg_id: AggId, d: &FindingDraft, at: Timestamp) -> AggregateCluster {
    AggregateCluster {
        agg_id,
        project_id: d.project_id.clone(),
        category: d.tool.category,
        tool: d.tool.clone(),
        canonical_title: d.title.clone(),
        canonical_description: d.description.clone(),
        rule_id: d.rule_id.clone(),
        location: d.location.clone(),
        cwe_ids: d.cwe_ids.clone(),
        cve_ids: d.cve_ids.clone(),
        members: BTreeMap::from([(d.raw_id.clone(), evidence(d))]),
        first_seen: at,
        changed_at: at,
    }
}

impl Rule<Document> for DedupRule {
    fn name(&self) -> &'static str {
        "dedup"
    }

    fn stratum(&self) -> u32 {
        2
    }

    fn triggers(&self) -> &'static [&'static str] {
        &[class::PARSED_REPORT]
    }

    fn produces(&self) -> &'static [&'static str] {
        &[class::AGGREGATE, class::SEMANTIC_INDEX]
    }

    fn accepts(&self, b: &Belief<Document>) -> bool {
        b.payload.as_parsed().is_some_and(|p| !p.groups.is_empty())
    }

    fn fire(&self, inputs: &[&Belief<Document>], store: &Store) -> Result<Vec<Derivation<Document>>, RuleError> {
        let prior = store.get_str(SEMANTIC_INDEX_ID);
        let mut index = prior.and_then(|b| b.payload.as_index()).cloned().unwrap_or_default();
        let mut index_sources = prior.map(|b| b.derived_from.clone()).unwrap_or_default();
        let mut touched: BTreeMap<AggId, (AggregateCluster, BTreeSet<BeliefId>)> = BTreeMap::new();

        let load = |touched: &mut BTreeMap<AggId, (AggregateCluster, BTreeSet<BeliefId>)>, id: &AggId| {
            if !touched.contains_key(id) {
                let b = store.get_str(id.as_str()).expect("indexed cluster is stored");
                let c = b.payload.as_aggregate().expect("cluster payload").clone();
                touched.insert(id.clone(), (c, b.derived_from.clone()));
            }
        };

        // Known members only refresh their evidence; unknown ones are queued.
        let mut pending: Vec<(&BeliefId, &FindingDraft, Timestamp)> = Vec::new();
        let mut queued: BTreeSet<&RawId> = BTreeSet::new();
        for b in inputs {
            let Some(p) = b.payload.as_parsed() else { continue };
            for g in &p.groups {
                let d = &g.draft;
                if let Some(agg) = index.agg_of(&d.raw_id).cloned() {
                    load(&mut touched, &agg);
                    let (c, from) = touched.get_mut(&agg).expect("loaded");
                    let ev = evidence(d);
                    if c.members.get(&d.raw_id) != Some(&ev) {
                        c.members.insert(d.raw_id.clone(), ev);
                        c.changed_at = c.changed_at.max(p.received_at);
                        from.insert(b.id.clone());
                    }
                } else if queued.insert(&d.raw_id) {
                    pending.push((&b.id, d, p.received_at));
                }
            }
        }

        if !pending.is_empty() {
            let texts: Vec<TermCounts> = pending.iter().map(|(_, d, _)| term_counts(&d.semantic_text())).collect();
            if index.needs_rebuild(&texts, &self.config) {
                index.rebuild(&texts, self.config.lsi_rank);
            }
            for ((source, d, at), terms) in pending.into_iter().zip(texts) {
                let a = index.assign_cluster(d.raw_id.clone(), terms, d.tool.category, self.config.similarity_threshold);
                index_sources.insert(source.clone());
                if a.created {
                    touched.insert(a.agg_id.clone(), (new_cluster(a.agg_id, d, at), BTreeSet::from([source.clone()])));
                } else {
                    load(&mut touched, &a.agg_id);
                    let (c, from) = touched.get_mut(&a.agg_id).expect("loaded");
                    c.members.insert(d.raw_id.clone(), evidence(d));
                    c.first_seen = c.first_seen.min(at);
                    c.changed_at = c.changed_at.max(at);
                    from.insert(source.clone());
                }
            }
        }

        let mut out: Vec<Derivation<Document>> = touched
            .into_values()
            .map(|(c, from)| Derivation {
                id: BeliefId::new(c.agg_id.as_str()),
                class: class::AGGREGATE,
                payload: Document::Aggregate(c),
                derived_from: from,
            })
            .collect();
        out.push(Derivation {
            id: BeliefId::new(SEMANTIC_INDEX_ID),
            class: class::SEMANTIC_INDEX,
            payload: Document::Index(Box::new(index)),
            derived_from: index_sources,
        });
        Ok(out)
    }
}

pub struct EnrichRule;

impl Rule<Document> for EnrichRule {
    fn name(&self) -> &'static str {
        "enrich"
    }

    fn stratum(&self) -> u32 {
        3
    }

    fn triggers(&self) -> &'static [&'static str] {
        &[class::AGGREGATE, class::ENRICHMENT_CONFIG]
    }

    fn produces(&self) -> &'static [&'static str] {
        &[class::ENRICHMENT_NOTES]
    }

    fn fire(&self, inputs: &[&Belief<Document>], store: &Store) -> Result<Vec<Derivation<Document>>, RuleError> {
        let config = store.enrichment_config();
        let (rules, _) = load_rules(config.and_then(|(_, c)| c.source.as_deref()));
        // A new rule file re-enriches everything.
        let targets: Vec<&AggregateCluster> = if inputs.iter().any(|b| b.class == class::ENRICHMENT_CONFIG) {
            store.aggregates()
        } else {
            inputs.iter().filter_map(|b| b.payload.as_aggregate()).collect()
        };
        Ok(targets
            .into_iter()
            .map(|c| {
                let fields = FindingFields {
                    title: &c.canonical_title,
                    description: &c.canonical_description,
                    rule_id: &c.rule_id,
                    tool: &c.tool,
                    location: &c.location,
                    cwe_ids: &c.cwe_ids,
                    cve_ids: &c.cve_ids,
                };
                let mut from = BTreeSet::from([BeliefId::new(c.agg_id.as_str())]);
                if let Some((b, _)) = config {
                    from.insert(b.id.clone());
                }
                Derivation {
                    id: notes_belief_id(&c.agg_id),
                    class: class::ENRICHMENT_NOTES,
                    payload: Document::Notes(EnrichmentNotes {
                        agg_id: c.agg_id.clone(),
                        notes: enrich_notes(&fields, &rules, &[]),
                    }),
                    derived_from: from,
                }
            })
            .collect())
    }
}

pub struct LifecycleRule {
    policy: StatusPolicy,
}

impl LifecycleRule {
    pub fn new(policy: StatusPolicy) -> Self {
        Self { policy }
    }
}

/// Working copies of raw findings touched in one firing.
struct RawWork<'s> {
    store: &'s Store,
    touched: BTreeMap<RawId, (RawFinding, BTreeSet<BeliefId>)>,
    changes: Vec<(StatusChange, BeliefId)>,
    next_seq: u64,
}

impl<'s> RawWork<'s> {
    fn get(&mut self, id: &RawId) -> Option<&mut (RawFinding, BTreeSet<BeliefId>)> {
        if !self.touched.contains_key(id) {
            let b = self.store.get_str(id.as_str())?;
            let f = b.payload.as_raw()?.clone();
            self.touched.insert(id.clone(), (f, b.derived_from.clone()));
        }
        self.touched.get_mut(id)
    }

    fn record(&mut self, t: Transition, at: Timestamp, report_id: Option<ReportId>, source: &BeliefId) {
        self.changes.push((
            StatusChange {
                seq: self.next_seq,
                at,
                raw_id: t.raw_id,
                old: t.old,
                new: t.new,
                actor: t.actor,
                set_by: t.set_by,
                report_id,
            },
            source.clone(),
        ));
        self.next_seq += 1;
    }
}

impl LifecycleRule {
    fn on_report(&self, w: &mut RawWork<'_>, source: &BeliefId, p: &ParsedReport) {
        let mut attested: BTreeSet<ScopeKey> = BTreeSet::from([ScopeKey {
            tool: p.tool.name.clone(),
            scope: p.scan_scope.clone(),
        }]);
        let mut present: BTreeSet<&RawId> = BTreeSet::new();
        for g in &p.groups {
            let d = &g.draft;
            let scope = ScopeKey {
                tool: d.tool.name.clone(),
                scope: p.scan_scope.clone(),
            };
            attested.insert(scope.clone());
            present.insert(&d.raw_id);
            let occ = Occurrence {
                report_id: &p.report_id,
                received_at: p.received_at,
                scope: &scope,
            };
            let existing = w.get(&d.raw_id).map(|(f, _)| f.clone());
            let (mut f, created) = record_occurrences(existing, d, occ);
            let reopened = if created.is_none() {
                reopen_on_reappearance(&mut f, &self.policy)
            } else {
                None
            };
            let mut from = w.touched.remove(&d.raw_id).map(|(_, s)| s).unwrap_or_default();
            from.insert(source.clone());
            w.touched.insert(d.raw_id.clone(), (f, from));
            for t in created.into_iter().chain(reopened) {
                w.record(t, p.received_at, Some(p.report_id.clone()), source);
            }
        }

        // Absence: every finding this report's scopes vouched for before.
        let ids: BTreeSet<RawId> = w
            .store
            .raw_findings()
            .into_iter()
            .map(|f| &f.raw_id)
            .chain(w.touched.keys())
            .filter(|id| !present.contains(id))
            .cloned()
            .collect();
        for id in ids {
            let current = w.touched.get(&id).map(|(f, _)| f).or_else(|| w.store.raw_finding(&id));
            let relevant = current.is_some_and(|f| !f.sources.is_disjoint(&attested) && self.policy.tracks_absence(f.status));
            if relevant {
                self.absent(w, &id, &attested, source, p);
            }
        }
    }

    fn absent(&self, w: &mut RawWork<'_>, id: &RawId, attested: &BTreeSet<ScopeKey>, source: &BeliefId, p: &ParsedReport) {
        let Some((f, from)) = w.get(id) else { return };
        let scope = f.sources.intersection(attested).next().cloned().expect("checked overlap");
        let t = apply_absence_transitions(f, &scope, &self.policy);
        from.insert(source.clone());
        if let Some(t) = t {
            w.record(t, p.received_at, Some(p.report_id.clone()), source);
        }
    }
}

impl Rule<Document> for LifecycleRule {
    fn name(&self) -> &'static str {
        "lifecycle"
    }

    fn stratum(&self) -> u32 {
        4
    }

    fn triggers(&self) -> &'static [&'static str] {
        &[class::PARSED_REPORT, class::USER_INPUT]
    }

    fn produces(&self) -> &'static [&'static str] {
        &[class::RAW_FINDING, class::STATUS_CHANGE]
    }

    fn accepts(&self, b: &Belief<Document>) -> bool {
        match &b.payload {
            Document::Parsed(_) => true,
            Document::UserInput(u) => matches!(u, UserInput::SetStatus { .. }),
            _ => false,
        }
    }

    fn fire(&self, inputs: &[&Belief<Document>], store: &Store) -> Result<Vec<Derivation<Document>>, RuleError> {
        let mut w = RawWork {
            store,
            touched: BTreeMap::new(),
            changes: Vec::new(),
            next_seq: store.count(class::STATUS_CHANGE) as u64 + 1,
        };
        for b in inputs {
            match &b.payload {
                Document::Parsed(p) => self.on_report(&mut w, &b.id, p),
                Document::UserInput(UserInput::SetStatus {
                    raw_ids,
                    status,
                    actor,
                    at,
                }) => {
                    for id in raw_ids {
                        // Ids vanish when a report is retracted; skip them.
                        let Some((f, from)) = w.get(id) else { continue };
                        let t = set_status(f, *status, actor).map_err(RuleError::new)?;
                        if let Some(t) = t {
                            from.insert(b.id.clone());
                            w.record(t, *at, None, &b.id);
                        }
                    }
                }
                _ => {}
            }
        }

        let mut out: Vec<Derivation<Document>> = w
            .touched
            .into_values()
            .map(|(f, from)| Derivation {
                id: BeliefId::new(f.raw_id.as_str()),
                class: class::RAW_FINDING,
                payload: Document::Raw(f),
                derived_from: from,
            })
            .collect();
        out.extend(w.changes.into_iter().map(|(c, source)| Derivation {
            id: change_belief_id(c.seq),
            class: class::STATUS_CHANGE,
            payload: Document::StatusChange(c),
            derived_from: BTreeSet::from([source]),
        }));
        Ok(out)
    }
}

pub struct ScoringRule;

impl Rule<Document> for ScoringRule {
    fn name(&self) -> &'static str {
        "scoring"
    }

    fn stratum(&self) -> u32 {
        5
    }

    fn triggers(&self) -> &'static [&'static str] {
        &[class::AGGREGATE, class::USER_INPUT]
    }

    fn produces(&self) -> &'static [&'static str] {
        &[class::SEVERITY, class::PRIORITY]
    }

    fn accepts(&self, b: &Belief<Document>) -> bool {
        match &b.payload {
            Document::Aggregate(_) => true,
            Document::UserInput(u) => matches!(u, UserInput::SetPriority { .. }),
            _ => false,
        }
    }

    fn fire(&self, inputs: &[&Belief<Document>], store: &Store) -> Result<Vec<Derivation<Document>>, RuleError> {
        let mut out = Vec::new();
        let mut priorities: BTreeMap<AggId, (crate::scoring::PriorityAssignment, BTreeSet<BeliefId>)> = BTreeMap::new();
        for b in inputs {
            match &b.payload {
                Document::Aggregate(c) => {
                    let Some(mut a) = compute_severity(&c.agg_id, c.category, &c.evidence()) else { continue };
                    let prior = store.severity(&c.agg_id);
                    a.history = prior.map(|p| p.history.clone()).unwrap_or_default();
                    if a.history.last().is_none_or(|(_, l)| *l != a.level) {
                        a.history.push((c.changed_at, a.level));
                    }
                    out.push(Derivation {
                        id: severity_belief_id(&c.agg_id),
                        class: class::SEVERITY,
                        payload: Document::Severity(a),
                        derived_from: BTreeSet::from([b.id.clone()]),
                    });
                }
                Document::UserInput(UserInput::SetPriority { agg_id, value, actor, at }) => {
                    if store.aggregate(agg_id).is_none() {
                        continue;
                    }
                    let prev = priorities.remove(agg_id).or_else(|| {
                        let pb = store.get(&priority_belief_id(agg_id))?;
                        Some((pb.payload.as_priority()?.clone(), pb.derived_from.clone()))
                    });
                    let p = refine_priority(agg_id, value.value(), actor, *at, prev.as_ref().map(|(p, _)| p))
                        .map_err(RuleError::new)?;
                    let mut from = prev.map(|(_, f)| f).unwrap_or_default();
                    from.insert(b.id.clone());
                    priorities.insert(agg_id.clone(), (p, from));
                }
                _ => {}
            }
        }
        out.extend(priorities.into_values().map(|(p, from)| Derivation {
            id: priority_belief_id(&p.agg_id),
            class: class::PRIORITY,
            payload: Document::Priority(p),
            derived_from: from,
        }));
        Ok(out)
    }
}

/// Schema with every rule and query registered.
pub fn build_schema(
    registry: Arc<AdapterRegistry>,
    dedup: DedupConfig,
    policy: StatusPolicy,
) -> Result<Schema<Document>, KbError> {
    let mut s = Schema::new(class::EXTERNAL);
    s.add_rule(Box::new(ParseRule::new(registry)))?;
    s.add_rule(Box::new(DedupRule::new(dedup)))?;
    s.add_rule(Box::new(EnrichRule))?;
    s.add_rule(Box::new(LifecycleRule::new(policy)))?;
    s.add_rule(Box::new(ScoringRule))?;
    for q in crate::queries::all() {
        s.add_query(q);
    }
    Ok(s)
}
