use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Belief, BeliefId, Origin};

/// Beliefs keyed by id with a secondary index on class.
///
/// Mutation is crate-private: only the knowledge base engine writes.
#[derive(Debug, Clone)]
pub struct BeliefStore<P> {
    pub(crate) beliefs: BTreeMap<BeliefId, Arc<Belief<P>>>,
    pub(crate) by_class: BTreeMap<String, BTreeSet<BeliefId>>,
    pub(crate) quarantined: BTreeMap<BeliefId, String>,
    pub(crate) next_seq: u64,
    pub(crate) next_batch: u64,
    pub(crate) version: u64,
    pub(crate) log_len: u64,
}

impl<P> Default for BeliefStore<P> {
    fn default() -> Self {
        Self {
            beliefs: BTreeMap::new(),
            by_class: BTreeMap::new(),
            quarantined: BTreeMap::new(),
            next_seq: 1,
            next_batch: 1,
            version: 0,
            log_len: 0,
        }
    }
}

/// Belief content without bookkeeping (times, sequence numbers).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalBelief<'a, P> {
    pub id: &'a BeliefId,
    pub class: &'a str,
    pub payload: &'a P,
    pub derived_from: &'a BTreeSet<BeliefId>,
    pub origin: Origin,
}

impl<P> BeliefStore<P> {
    pub fn get(&self, id: &BeliefId) -> Option<&Belief<P>> {
        self.beliefs.get(id).map(Arc::as_ref)
    }

    pub fn get_str(&self, id: &str) -> Option<&Belief<P>> {
        self.get(&BeliefId::new(id))
    }

    pub fn contains(&self, id: &BeliefId) -> bool {
        self.beliefs.contains_key(id)
    }

    /// Beliefs of one class in id order.
    pub fn class<'a>(&'a self, class: &str) -> impl Iterator<Item = &'a Belief<P>> + 'a {
        self.by_class
            .get(class)
            .into_iter()
            .flatten()
            .filter_map(move |id| self.get(id))
    }

    pub fn count(&self, class: &str) -> usize {
        self.by_class.get(class).map_or(0, BTreeSet::len)
    }

    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Belief<P>> {
        self.beliefs.values().map(Arc::as_ref)
    }

    /// External beliefs in log order.
    pub fn externals(&self) -> Vec<&Belief<P>> {
        let mut out: Vec<&Belief<P>> = self.iter().filter(|b| b.origin == Origin::External).collect();
        out.sort_by_key(|b| b.seq);
        out
    }

    pub fn quarantined(&self) -> &BTreeMap<BeliefId, String> {
        &self.quarantined
    }

    pub fn is_quarantined(&self, id: &BeliefId) -> bool {
        self.quarantined.contains_key(id)
    }

    /// Log position the next external belief will get. Never reused.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Incremented on every committed fixpoint.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn canonical(&self) -> Vec<CanonicalBelief<'_, P>> {
        self.iter()
            .map(|b| CanonicalBelief {
                id: &b.id,
                class: &b.class,
                payload: &b.payload,
                derived_from: &b.derived_from,
                origin: b.origin,
            })
            .collect()
    }

    /// Every derived belief's provenance must reach external beliefs without cycles.
    pub fn check_provenance(&self) -> Result<(), String> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Visiting,
            Done,
        }
        let mut marks: BTreeMap<&BeliefId, Mark> = BTreeMap::new();

        fn visit<'a, P>(
            store: &'a BeliefStore<P>,
            id: &'a BeliefId,
            marks: &mut BTreeMap<&'a BeliefId, Mark>,
        ) -> Result<(), String> {
            match marks.get(id) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Visiting) => return Err(format!("provenance cycle through {id}")),
                None => {}
            }
            let b = store.get(id).ok_or_else(|| format!("dangling provenance reference {id}"))?;
            match (b.origin, b.derived_from.is_empty()) {
                (Origin::External, false) => return Err(format!("external belief {id} has provenance")),
                (Origin::Derived, true) => return Err(format!("derived belief {id} has no provenance")),
                _ => {}
            }
            marks.insert(id, Mark::Visiting);
            for parent in &b.derived_from {
                visit(store, parent, marks)?;
            }
            marks.insert(id, Mark::Done);
            Ok(())
        }

        for id in self.beliefs.keys() {
            visit(self, id, &mut marks)?;
        }
        Ok(())
    }

    pub(crate) fn insert(&mut self, belief: Belief<P>) {
        self.by_class
            .entry(belief.class.clone())
            .or_default()
            .insert(belief.id.clone());
        self.beliefs.insert(belief.id.clone(), Arc::new(belief));
    }

    pub(crate) fn quarantine(&mut self, id: BeliefId, reason: String) {
        self.quarantined.insert(id, reason);
    }

    pub(crate) fn beliefs_map(&self) -> &BTreeMap<BeliefId, Arc<Belief<P>>> {
        &self.beliefs
    }
}

impl<P: PartialEq> BeliefStore<P> {
    /// Equality of content, ignoring timestamps and sequence numbers.
    pub fn canonically_equal(&self, other: &Self) -> bool {
        self.canonical() == other.canonical() && self.quarantined.keys().eq(other.quarantined.keys())
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct StoreImage<P> {
    pub beliefs: Vec<Belief<P>>,
    pub quarantined: BTreeMap<BeliefId, String>,
    pub next_seq: u64,
    pub next_batch: u64,
    pub version: u64,
    pub log_len: u64,
}

impl<P: Clone> BeliefStore<P> {
    pub(crate) fn to_image(&self) -> StoreImage<P> {
        StoreImage {
            beliefs: self.iter().cloned().collect(),
            quarantined: self.quarantined.clone(),
            next_seq: self.next_seq,
            next_batch: self.next_batch,
            version: self.version,
            log_len: self.log_len,
        }
    }

    pub(crate) fn from_image(image: StoreImage<P>) -> Self {
        let mut store = BeliefStore {
            quarantined: image.quarantined,
            next_seq: image.next_seq,
            next_batch: image.next_batch,
            version: image.version,
            log_len: image.log_len,
            ..Default::default()
        };
        for b in image.beliefs {
            store.insert(b);
        }
        store
    }
}
