//! A small stratified forward-chaining knowledge base.
//!
//! External beliefs (reports, user input, configuration) are asserted in
//! batches. After each batch the engine runs every registered [`Rule`] in
//! ascending stratum order, feeding each rule the new or changed beliefs of
//! its trigger classes, until no rule derives anything new. Derived beliefs
//! are upserted by id; a derivation that reproduces the stored payload is
//! not a change.
//!
//! Revising or retracting an external belief rebuilds all derived state by
//! replaying the remaining external log batch by batch. Derivation is
//! deterministic, so the replay is equivalent to ingesting the remaining
//! beliefs from scratch.

mod engine;
pub mod storage;
mod store;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::Timestamp;

pub use engine::{KnowledgeBase, Revision, Schema};
pub use storage::{DirectoryBackend, LogRecord, MemoryBackend, StorageBackend, StorageError};
pub use store::{BeliefStore, CanonicalBelief};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefId(pub String);

impl BeliefId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BeliefId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    External,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief<P> {
    pub id: BeliefId,
    pub class: String,
    pub payload: P,
    /// Empty exactly for external beliefs.
    pub derived_from: BTreeSet<BeliefId>,
    pub asserted_at: Timestamp,
    pub origin: Origin,
    /// Position in the external log. Zero for derived beliefs.
    pub seq: u64,
    /// Fixpoint batch that asserted or last derived this belief.
    pub batch: u64,
}

/// An external belief to assert.
#[derive(Debug, Clone)]
pub struct NewBelief<P> {
    pub id: BeliefId,
    pub class: String,
    pub payload: P,
    pub asserted_at: Timestamp,
}

impl<P> NewBelief<P> {
    pub fn new(id: impl Into<String>, class: impl Into<String>, payload: P, asserted_at: Timestamp) -> Self {
        Self {
            id: BeliefId::new(id),
            class: class.into(),
            payload,
            asserted_at,
        }
    }
}

/// Output of a rule firing.
#[derive(Debug, Clone)]
pub struct Derivation<P> {
    pub id: BeliefId,
    pub class: &'static str,
    pub payload: P,
    pub derived_from: BTreeSet<BeliefId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct RuleError(pub String);

impl RuleError {
    pub fn new(msg: impl fmt::Display) -> Self {
        Self(msg.to_string())
    }
}

/// Derivation logic. Bodies must be deterministic given their inputs and
/// the store view.
pub trait Rule<P>: Send + Sync {
    fn name(&self) -> &'static str;

    /// Strata run in ascending order; 0 is reserved for external beliefs.
    fn stratum(&self) -> u32;

    fn triggers(&self) -> &'static [&'static str];

    fn produces(&self) -> &'static [&'static str];

    /// Filters trigger-class beliefs this rule cares about.
    fn accepts(&self, _belief: &Belief<P>) -> bool {
        true
    }

    fn fire(&self, inputs: &[&Belief<P>], store: &BeliefStore<P>) -> Result<Vec<Derivation<P>>, RuleError>;
}

/// A read-only computed view over the store.
pub trait Query<P>: Send + Sync {
    fn name(&self) -> &'static str;

    fn evaluate(&self, store: &BeliefStore<P>, params: &Value) -> Result<Value, QueryError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Firing {
    pub rule: String,
    pub stratum: u32,
    pub inputs: Vec<BeliefId>,
    /// Beliefs this firing added or changed.
    pub outputs: Vec<BeliefId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DerivationTrace {
    pub firings: Vec<Firing>,
}

impl DerivationTrace {
    pub fn is_empty(&self) -> bool {
        self.firings.is_empty()
    }

    pub fn rule_names(&self) -> Vec<&str> {
        self.firings.iter().map(|f| f.rule.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChangeSet {
    pub added: Vec<BeliefId>,
    pub updated: Vec<BeliefId>,
    pub removed: Vec<BeliefId>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.updated.is_empty() && self.removed.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("unknown belief class `{0}`")]
    UnknownClass(String),
    #[error("duplicate belief id `{0}`")]
    DuplicateId(BeliefId),
    #[error("unknown belief `{0}`")]
    UnknownBelief(BeliefId),
    #[error("derived beliefs are recomputed, not edited")]
    DerivedNotEditable,
    #[error("a fixpoint run is pending")]
    PendingChanges,
    #[error("rule `{rule}` failed: {message}; quarantined {quarantined:?}")]
    RuleFailed {
        rule: String,
        message: String,
        quarantined: Vec<BeliefId>,
    },
    #[error("invalid rule set: {0}")]
    Schema(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Storage(#[from] StorageError),
}
