use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::Value;

use super::storage::{LogRecord, MemoryBackend, StorageBackend};
use super::store::BeliefStore;
use super::{
    Belief, BeliefId, ChangeSet, DerivationTrace, Firing, KbError, NewBelief, Origin, Query, QueryError, Rule,
    RuleError,
};
use crate::model::Timestamp;

/// External classes, rules and queries of one knowledge base.
pub struct Schema<P> {
    external: BTreeSet<String>,
    rules: Vec<Box<dyn Rule<P>>>,
    queries: BTreeMap<&'static str, Box<dyn Query<P>>>,
}

impl<P> Schema<P> {
    pub fn new<I, S>(external_classes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            external: external_classes.into_iter().map(Into::into).collect(),
            rules: Vec::new(),
            queries: BTreeMap::new(),
        }
    }

    /// Registers a rule, checking stratification: every trigger class must be
    /// external or produced only by rules in lower strata, and each derived
    /// class has exactly one producing rule.
    pub fn add_rule(&mut self, rule: Box<dyn Rule<P>>) -> Result<&mut Self, KbError> {
        let name = rule.name();
        if rule.stratum() == 0 {
            return Err(KbError::Schema(format!("rule `{name}`: stratum 0 is reserved for external beliefs")));
        }
        if self.rules.iter().any(|r| r.name() == name) {
            return Err(KbError::Schema(format!("duplicate rule name `{name}`")));
        }
        for &class in rule.produces() {
            if self.external.contains(class) {
                return Err(KbError::Schema(format!("rule `{name}` produces external class `{class}`")));
            }
            if let Some(other) = self.producer(class) {
                return Err(KbError::Schema(format!(
                    "class `{class}` produced by both `{}` and `{name}`",
                    other.name()
                )));
            }
        }
        for &class in rule.triggers() {
            if self.external.contains(class) {
                continue;
            }
            match self.producer(class) {
                Some(p) if p.stratum() < rule.stratum() => {}
                Some(p) => {
                    return Err(KbError::Schema(format!(
                        "rule `{name}` (stratum {}) triggers on `{class}` from stratum {}",
                        rule.stratum(),
                        p.stratum()
                    )))
                }
                None => return Err(KbError::Schema(format!("rule `{name}` triggers on unknown class `{class}`"))),
            }
        }
        self.rules.push(rule);
        Ok(self)
    }

    pub fn add_query(&mut self, query: Box<dyn Query<P>>) -> &mut Self {
        self.queries.insert(query.name(), query);
        self
    }

    pub fn is_external(&self, class: &str) -> bool {
        self.external.contains(class)
    }

    pub fn rules(&self) -> impl Iterator<Item = &dyn Rule<P>> {
        self.rules.iter().map(|r| r.as_ref())
    }

    pub fn strata(&self) -> BTreeSet<u32> {
        self.rules.iter().map(|r| r.stratum()).collect()
    }

    pub fn query_names(&self) -> Vec<&'static str> {
        self.queries.keys().copied().collect()
    }

    pub fn evaluate_query(&self, store: &BeliefStore<P>, name: &str, params: &Value) -> Result<Value, QueryError> {
        self.queries
            .get(name)
            .ok_or_else(|| QueryError::UnknownQuery(name.to_string()))?
            .evaluate(store, params)
    }

    fn producer(&self, class: &str) -> Option<&dyn Rule<P>> {
        self.rules
            .iter()
            .find(|r| r.produces().contains(&class))
            .map(|r| r.as_ref())
    }
}

pub enum Revision<P> {
    Replace { payload: P, at: Timestamp },
    Retract { at: Timestamp },
}

struct Failure {
    rule: String,
    error: RuleError,
}

/// Runs all strata for one batch of external beliefs already in `store`.
fn derive<P: Clone + PartialEq>(
    schema: &Schema<P>,
    store: &mut BeliefStore<P>,
    externals: &[BeliefId],
) -> Result<DerivationTrace, Failure> {
    let batch = store.next_batch;
    let commit_time = externals
        .iter()
        .filter_map(|id| store.get(id))
        .map(|b| b.asserted_at)
        .max()
        .unwrap_or_default();

    let mut changes: Vec<BeliefId> = externals.to_vec();
    let mut cursors = vec![0usize; schema.rules.len()];
    let mut trace = DerivationTrace::default();

    for stratum in schema.strata() {
        loop {
            let mut fired = false;
            for (ri, rule) in schema.rules.iter().enumerate().filter(|(_, r)| r.stratum() == stratum) {
                let start = cursors[ri];
                cursors[ri] = changes.len();
                let mut seen = BTreeSet::new();
                let input_ids: Vec<BeliefId> = changes[start..]
                    .iter()
                    .filter(|id| seen.insert((*id).clone()))
                    .filter(|id| {
                        store
                            .get(id)
                            .is_some_and(|b| rule.triggers().contains(&b.class.as_str()) && rule.accepts(b))
                    })
                    .cloned()
                    .collect();
                if input_ids.is_empty() {
                    continue;
                }
                fired = true;

                let inputs: Vec<&Belief<P>> = input_ids.iter().filter_map(|id| store.get(id)).collect();
                let derived = rule.fire(&inputs, store).map_err(|error| Failure {
                    rule: rule.name().to_string(),
                    error,
                })?;

                let mut outputs = Vec::new();
                for d in derived {
                    let fail = |msg: String| Failure {
                        rule: rule.name().to_string(),
                        error: RuleError(msg),
                    };
                    if !rule.produces().contains(&d.class) {
                        return Err(fail(format!("derived undeclared class `{}`", d.class)));
                    }
                    if d.derived_from.is_empty() {
                        return Err(fail(format!("derived `{}` without provenance", d.id)));
                    }
                    if let Some(existing) = store.get(&d.id) {
                        if existing.origin == Origin::External || existing.class != d.class {
                            return Err(fail(format!("derived id `{}` collides with another belief", d.id)));
                        }
                        if existing.payload == d.payload && existing.derived_from == d.derived_from {
                            continue;
                        }
                    }
                    outputs.push(d.id.clone());
                    changes.push(d.id.clone());
                    store.insert(Belief {
                        id: d.id,
                        class: d.class.to_string(),
                        payload: d.payload,
                        derived_from: d.derived_from,
                        asserted_at: commit_time,
                        origin: Origin::Derived,
                        seq: 0,
                        batch,
                    });
                }
                trace.firings.push(Firing {
                    rule: rule.name().to_string(),
                    stratum,
                    inputs: input_ids,
                    outputs,
                });
            }
            if !fired {
                break;
            }
        }
    }
    Ok(trace)
}

/// Rebuilds a store from an external log, batch by batch.
fn replay<P: Clone + PartialEq>(schema: &Schema<P>, mut externals: Vec<Belief<P>>, prior: &BeliefStore<P>) -> BeliefStore<P> {
    externals.sort_by_key(|b| (b.batch, b.seq));
    let mut store = BeliefStore::<P> {
        next_seq: prior.next_seq,
        version: prior.version,
        log_len: prior.log_len,
        ..Default::default()
    };
    let mut i = 0;
    while i < externals.len() {
        let batch = externals[i].batch;
        let mut ids = Vec::new();
        while i < externals.len() && externals[i].batch == batch {
            ids.push(externals[i].id.clone());
            store.next_seq = store.next_seq.max(externals[i].seq + 1);
            store.insert(externals[i].clone());
            i += 1;
        }
        store.next_batch = batch;
        let before = store.clone();
        if let Err(f) = derive(schema, &mut store, &ids) {
            store = before;
            let reason = format!("rule `{}` failed: {}", f.rule, f.error);
            for id in ids {
                store.quarantine(id, reason.clone());
            }
        }
    }
    store.next_batch = externals.last().map_or(prior.next_batch, |b| b.batch + 1).max(prior.next_batch);
    store.version += 1;
    store
}

fn diff<P: PartialEq>(old: &BeliefStore<P>, new: &BeliefStore<P>) -> ChangeSet {
    let mut cs = ChangeSet::default();
    for (id, b) in new.beliefs_map() {
        match old.get(id) {
            None => cs.added.push(id.clone()),
            Some(o) if o.payload != b.payload || o.derived_from != b.derived_from => cs.updated.push(id.clone()),
            Some(_) => {}
        }
    }
    cs.removed = old
        .beliefs_map()
        .keys()
        .filter(|id| !new.contains(id))
        .cloned()
        .collect();
    cs
}

/// The knowledge base: a single writer over a [`BeliefStore`].
///
/// Readers take [`KnowledgeBase::committed`], an immutable snapshot of the
/// last committed fixpoint.
pub struct KnowledgeBase<P> {
    schema: Arc<Schema<P>>,
    store: Arc<BeliefStore<P>>,
    committed: Arc<BeliefStore<P>>,
    pending: Vec<BeliefId>,
    backend: Box<dyn StorageBackend<P>>,
}

impl<P> KnowledgeBase<P>
where
    P: Clone + PartialEq + Send + Sync + 'static,
{
    /// An in-memory knowledge base.
    pub fn new(schema: Schema<P>) -> Self {
        let store = Arc::new(BeliefStore::default());
        Self {
            schema: Arc::new(schema),
            committed: Arc::clone(&store),
            store,
            pending: Vec::new(),
            backend: Box::new(MemoryBackend::default()),
        }
    }

    /// Opens a persistent knowledge base. The snapshot is used when it
    /// matches the log; otherwise the log is replayed.
    pub fn open(schema: Schema<P>, backend: Box<dyn StorageBackend<P>>) -> Result<Self, KbError> {
        let log = backend.read_log()?;
        let store = match backend.load_snapshot()? {
            Some(snap) if snap.log_len == log.len() as u64 => snap,
            _ => {
                let mut externals: Vec<Belief<P>> = Vec::new();
                for rec in log.iter() {
                    match rec {
                        LogRecord::Assert { belief } => externals.push(belief.clone()),
                        LogRecord::Retract { id, .. } => externals.retain(|b| &b.id != id),
                    }
                }
                let prior = BeliefStore::<P> {
                    next_seq: log
                        .iter()
                        .filter_map(|r| match r {
                            LogRecord::Assert { belief } => Some(belief.seq + 1),
                            LogRecord::Retract { .. } => None,
                        })
                        .max()
                        .unwrap_or(1),
                    log_len: log.len() as u64,
                    ..Default::default()
                };
                replay(&schema, externals, &prior)
            }
        };
        let store = Arc::new(store);
        let mut kb = Self {
            schema: Arc::new(schema),
            committed: Arc::clone(&store),
            store,
            pending: Vec::new(),
            backend,
        };
        kb.backend.write_snapshot(&kb.store)?;
        Ok(kb)
    }

    pub fn schema(&self) -> &Schema<P> {
        &self.schema
    }

    /// Working store, including asserted but not yet derived beliefs.
    pub fn store(&self) -> &BeliefStore<P> {
        &self.store
    }

    /// Snapshot of the last committed fixpoint.
    pub fn committed(&self) -> Arc<BeliefStore<P>> {
        Arc::clone(&self.committed)
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Stores a batch of external beliefs and schedules a fixpoint run.
    /// On error nothing is stored.
    pub fn assert_beliefs(&mut self, batch: Vec<NewBelief<P>>) -> Result<ChangeSet, KbError> {
        if batch.is_empty() {
            return Err(KbError::EmptyBatch);
        }
        let mut ids = BTreeSet::new();
        for nb in &batch {
            if !self.schema.is_external(&nb.class) {
                return Err(KbError::UnknownClass(nb.class.clone()));
            }
            if self.store.contains(&nb.id) || !ids.insert(nb.id.clone()) {
                return Err(KbError::DuplicateId(nb.id.clone()));
            }
        }

        let batch_no = self.store.next_batch;
        let mut seq = self.store.next_seq;
        let beliefs: Vec<Belief<P>> = batch
            .into_iter()
            .map(|nb| {
                let b = Belief {
                    id: nb.id,
                    class: nb.class,
                    payload: nb.payload,
                    derived_from: BTreeSet::new(),
                    asserted_at: nb.asserted_at,
                    origin: Origin::External,
                    seq,
                    batch: batch_no,
                };
                seq += 1;
                b
            })
            .collect();

        let records: Vec<LogRecord<P>> = beliefs
            .iter()
            .map(|b| LogRecord::Assert { belief: b.clone() })
            .collect();
        self.backend.append_log(&records)?;

        let store = Arc::make_mut(&mut self.store);
        store.next_seq = seq;
        store.log_len += records.len() as u64;
        let mut cs = ChangeSet::default();
        for b in beliefs {
            cs.added.push(b.id.clone());
            self.pending.push(b.id.clone());
            store.insert(b);
        }
        Ok(cs)
    }

    /// Runs rules to quiescence over the pending batch.
    ///
    /// If a rule fails, derived state is rolled back to before the batch and
    /// the batch's external beliefs are kept but quarantined.
    pub fn run_to_fixpoint(&mut self) -> Result<DerivationTrace, KbError> {
        if self.pending.is_empty() {
            return Ok(DerivationTrace::default());
        }
        let externals = std::mem::take(&mut self.pending);
        let backup = Arc::clone(&self.store);
        let result = derive(&self.schema, Arc::make_mut(&mut self.store), &externals);

        let outcome = match result {
            Ok(trace) => Ok(trace),
            Err(f) => {
                tracing::warn!(rule = %f.rule, error = %f.error, "rule failed, quarantining batch");
                self.store = backup;
                let store = Arc::make_mut(&mut self.store);
                let reason = format!("rule `{}` failed: {}", f.rule, f.error);
                for id in &externals {
                    store.quarantine(id.clone(), reason.clone());
                }
                Err(KbError::RuleFailed {
                    rule: f.rule,
                    message: f.error.0,
                    quarantined: externals,
                })
            }
        };
        let store = Arc::make_mut(&mut self.store);
        store.next_batch += 1;
        store.version += 1;
        self.commit_snapshot()?;
        outcome
    }

    /// Asserts a batch and runs the fixpoint.
    pub fn commit(&mut self, batch: Vec<NewBelief<P>>) -> Result<DerivationTrace, KbError> {
        self.assert_beliefs(batch)?;
        self.run_to_fixpoint()
    }

    /// Replaces or retracts an external belief and re-derives everything
    /// that depends on it. A replacement is ordered after all existing
    /// beliefs, so revising to `X` is the same as retracting and then
    /// asserting `X`.
    pub fn revise(&mut self, id: &BeliefId, revision: Revision<P>) -> Result<ChangeSet, KbError> {
        if self.has_pending() {
            return Err(KbError::PendingChanges);
        }
        let old = self.store.get(id).ok_or_else(|| KbError::UnknownBelief(id.clone()))?;
        if old.origin == Origin::Derived {
            return Err(KbError::DerivedNotEditable);
        }
        if let Revision::Replace { payload, .. } = &revision {
            if payload == &old.payload {
                return Ok(ChangeSet::default());
            }
        }

        let mut externals: Vec<Belief<P>> = self
            .store
            .externals()
            .into_iter()
            .filter(|b| &b.id != id)
            .cloned()
            .collect();
        let mut records = Vec::new();
        let at = match &revision {
            Revision::Replace { at, .. } | Revision::Retract { at } => *at,
        };
        records.push(LogRecord::Retract { id: id.clone(), at });

        let mut prior = BeliefStore::<P> {
            next_seq: self.store.next_seq,
            next_batch: self.store.next_batch,
            version: self.store.version,
            log_len: self.store.log_len + 1,
            ..Default::default()
        };
        if let Revision::Replace { payload, at } = revision {
            let b = Belief {
                id: id.clone(),
                class: old.class.clone(),
                payload,
                derived_from: BTreeSet::new(),
                asserted_at: at,
                origin: Origin::External,
                seq: prior.next_seq,
                batch: prior.next_batch,
            };
            prior.next_seq += 1;
            prior.log_len += 1;
            records.push(LogRecord::Assert { belief: b.clone() });
            externals.push(b);
        }

        let rebuilt = replay(&self.schema, externals, &prior);
        self.backend.append_log(&records)?;
        let cs = diff(&self.store, &rebuilt);
        self.store = Arc::new(rebuilt);
        self.commit_snapshot()?;
        Ok(cs)
    }

    pub fn evaluate_query(&self, name: &str, params: &Value) -> Result<Value, KbError> {
        Ok(self.schema.evaluate_query(&self.committed, name, params)?)
    }

    /// The full external belief log, for audit export.
    pub fn export_log(&self) -> Result<Vec<LogRecord<P>>, KbError> {
        Ok(self.backend.read_log()?)
    }

    fn commit_snapshot(&mut self) -> Result<(), KbError> {
        self.backend.write_snapshot(&self.store)?;
        self.committed = Arc::clone(&self.store);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Derivation;
    use chrono::{TimeZone, Utc};
    use std::collections::BTreeSet;

    // Toy payload: numbers, with rules that double them and sum them.
    type P = i64;

    struct Double;
    impl Rule<P> for Double {
        fn name(&self) -> &'static str {
            "double"
        }
        fn stratum(&self) -> u32 {
            1
        }
        fn triggers(&self) -> &'static [&'static str] {
            &["Num"]
        }
        fn produces(&self) -> &'static [&'static str] {
            &["Doubled"]
        }
        fn fire(&self, inputs: &[&Belief<P>], _: &BeliefStore<P>) -> Result<Vec<Derivation<P>>, RuleError> {
            inputs
                .iter()
                .map(|b| {
                    if b.payload < 0 {
                        return Err(RuleError::new("negative input"));
                    }
                    Ok(Derivation {
                        id: BeliefId::new(format!("d-{}", b.id)),
                        class: "Doubled",
                        payload: b.payload * 2,
                        derived_from: BTreeSet::from([b.id.clone()]),
                    })
                })
                .collect()
        }
    }

    struct Total;
    impl Rule<P> for Total {
        fn name(&self) -> &'static str {
            "total"
        }
        fn stratum(&self) -> u32 {
            2
        }
        fn triggers(&self) -> &'static [&'static str] {
            &["Doubled"]
        }
        fn produces(&self) -> &'static [&'static str] {
            &["Total"]
        }
        fn fire(&self, _: &[&Belief<P>], store: &BeliefStore<P>) -> Result<Vec<Derivation<P>>, RuleError> {
            let ids: BTreeSet<BeliefId> = store.class("Doubled").map(|b| b.id.clone()).collect();
            Ok(vec![Derivation {
                id: BeliefId::new("total"),
                class: "Total",
                payload: store.class("Doubled").map(|b| b.payload).sum(),
                derived_from: ids,
            }])
        }
    }

    fn kb() -> KnowledgeBase<P> {
        let mut s = Schema::new(["Num"]);
        s.add_rule(Box::new(Double)).unwrap();
        s.add_rule(Box::new(Total)).unwrap();
        KnowledgeBase::new(s)
    }

    fn at(h: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2024, 1, 1, h, 0, 0).unwrap()
    }

    fn num(id: &str, v: i64) -> NewBelief<P> {
        NewBelief::new(id, "Num", v, at(1))
    }

    #[test]
    fn assert_then_fixpoint() {
        let mut kb = kb();
        let cs = kb.assert_beliefs(vec![num("a", 1), num("b", 2)]).unwrap();
        assert_eq!(cs.added.len(), 2);
        assert!(kb.has_pending());
        let trace = kb.run_to_fixpoint().unwrap();
        assert_eq!(trace.rule_names(), ["double", "total"]);
        assert_eq!(kb.store().get_str("total").unwrap().payload, 6);
        assert!(kb.run_to_fixpoint().unwrap().is_empty());
        kb.store().check_provenance().unwrap();
    }

    #[test]
    fn empty_batch_and_unknown_class() {
        let mut kb = kb();
        assert!(matches!(kb.assert_beliefs(vec![]), Err(KbError::EmptyBatch)));
        let err = kb.assert_beliefs(vec![NewBelief::new("x", "Doubled", 1, at(1))]).unwrap_err();
        assert!(matches!(err, KbError::UnknownClass(_)));
    }

    #[test]
    fn duplicate_id_leaves_store_unchanged() {
        let mut kb = kb();
        kb.commit(vec![num("a", 1)]).unwrap();
        let before = kb.committed();
        assert!(matches!(kb.assert_beliefs(vec![num("a", 5)]), Err(KbError::DuplicateId(_))));
        assert!(matches!(kb.assert_beliefs(vec![num("c", 5), num("c", 6)]), Err(KbError::DuplicateId(_))));
        assert!(kb.store().canonically_equal(&before));
        assert!(!kb.has_pending());
    }

    #[test]
    fn provenance_change_is_an_update() {
        let mut kb = kb();
        kb.commit(vec![num("a", 0)]).unwrap();
        // Same total, but it now also depends on d-b.
        let trace = kb.commit(vec![num("b", 0)]).unwrap();
        let total = trace.firings.iter().find(|f| f.rule == "total").unwrap();
        assert_eq!(total.outputs, vec![BeliefId::new("total")]);
        assert_eq!(kb.store().get_str("total").unwrap().derived_from.len(), 2);
    }

    #[test]
    fn failing_rule_rolls_back_and_quarantines() {
        let mut kb = kb();
        kb.commit(vec![num("a", 1)]).unwrap();
        let err = kb.commit(vec![num("bad", -1), num("c", 3)]).unwrap_err();
        match err {
            KbError::RuleFailed { rule, quarantined, .. } => {
                assert_eq!(rule, "double");
                assert_eq!(quarantined.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(kb.store().get_str("total").unwrap().payload, 2);
        assert!(kb.store().get_str("d-c").is_none());
        assert!(kb.store().get_str("bad").is_some());
        assert!(kb.store().is_quarantined(&BeliefId::new("c")));
    }

    #[test]
    fn revise_derived_is_rejected() {
        let mut kb = kb();
        kb.commit(vec![num("a", 1)]).unwrap();
        let err = kb.revise(&BeliefId::new("total"), Revision::Retract { at: at(2) }).unwrap_err();
        assert!(matches!(err, KbError::DerivedNotEditable));
    }

    #[test]
    fn revise_identical_payload_is_empty() {
        let mut kb = kb();
        kb.commit(vec![num("a", 1)]).unwrap();
        let cs = kb
            .revise(&BeliefId::new("a"), Revision::Replace { payload: 1, at: at(2) })
            .unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn revise_equals_retract_then_assert() {
        let mut a = kb();
        let mut b = kb();
        for kb in [&mut a, &mut b] {
            kb.commit(vec![num("x", 1)]).unwrap();
            kb.commit(vec![num("y", 2), num("z", 3)]).unwrap();
        }
        let cs = a
            .revise(&BeliefId::new("x"), Revision::Replace { payload: 10, at: at(3) })
            .unwrap();
        assert!(cs.updated.contains(&BeliefId::new("total")));
        b.revise(&BeliefId::new("x"), Revision::Retract { at: at(3) }).unwrap();
        assert!(b.store().get_str("d-x").is_none());
        b.commit(vec![NewBelief::new("x", "Num", 10, at(3))]).unwrap();
        assert!(a.store().canonically_equal(b.store()));
        assert_eq!(a.store().get_str("total").unwrap().payload, 30);
    }

    #[test]
    fn stratification_is_enforced() {
        struct Loop;
        impl Rule<P> for Loop {
            fn name(&self) -> &'static str {
                "loop"
            }
            fn stratum(&self) -> u32 {
                1
            }
            fn triggers(&self) -> &'static [&'static str] {
                &["Total"]
            }
            fn produces(&self) -> &'static [&'static str] {
                &["Other"]
            }
            fn fire(&self, _: &[&Belief<P>], _: &BeliefStore<P>) -> Result<Vec<Derivation<P>>, RuleError> {
                Ok(vec![])
            }
        }
        let mut s = Schema::new(["Num"]);
        s.add_rule(Box::new(Double)).unwrap();
        s.add_rule(Box::new(Total)).unwrap();
        assert!(matches!(s.add_rule(Box::new(Loop)), Err(KbError::Schema(_))));
        assert!(matches!(s.add_rule(Box::new(Double)), Err(KbError::Schema(_))));
    }

    #[test]
    fn persistent_store_reopens_identically() {
        let dir = tempfile::tempdir().unwrap();
        let schema = || {
            let mut s = Schema::new(["Num"]);
            s.add_rule(Box::new(Double)).unwrap();
            s.add_rule(Box::new(Total)).unwrap();
            s
        };
        let backend = || Box::new(crate::kb::DirectoryBackend::open(dir.path()).unwrap());
        let mut kb = KnowledgeBase::open(schema(), backend()).unwrap();
        kb.commit(vec![num("a", 1)]).unwrap();
        kb.commit(vec![num("b", 4)]).unwrap();
        kb.revise(&BeliefId::new("a"), Revision::Retract { at: at(3) }).unwrap();
        let expected = kb.committed();
        drop(kb);

        let reopened = KnowledgeBase::open(schema(), backend()).unwrap();
        assert!(reopened.store().canonically_equal(&expected));

        // Without the snapshot the log replay must arrive at the same state.
        std::fs::remove_file(dir.path().join("snapshot.json")).unwrap();
        let replayed = KnowledgeBase::open(schema(), backend()).unwrap();
        assert!(replayed.store().canonically_equal(&expected));
        assert_eq!(replayed.export_log().unwrap().len(), 3);
    }
}
