//! Named queries registered on the triage schema.

use std::collections::BTreeMap;

use chrono::DateTime;
use serde_json::{json, Value};

use crate::document::{Store, StoreExt};
use crate::kb::{BeliefStore, Query, QueryError};
use crate::document::Document;
use crate::model::{SeverityBand, Status, Timestamp};
use crate::views;

type Eval = fn(&Store, &Value) -> Result<Value, QueryError>;

struct Named {
    name: &'static str,
    eval: Eval,
}

impl Query<Document> for Named {
    fn name(&self) -> &'static str {
        self.name
    }

    fn evaluate(&self, store: &BeliefStore<Document>, params: &Value) -> Result<Value, QueryError> {
        (self.eval)(store, params)
    }
}

pub fn all() -> Vec<Box<dyn Query<Document>>> {
    let table: [(&'static str, Eval); 6] = [
        ("top_priority", top_priority),
        ("open_count", open_count),
        ("status_counts", status_counts),
        ("severity_counts", severity_counts),
        ("new_findings", new_findings),
        ("quarantined", quarantined),
    ];
    table
        .into_iter()
        .map(|(name, eval)| Box::new(Named { name, eval }) as Box<dyn Query<Document>>)
        .collect()
}

fn param_u64(params: &Value, key: &str, default: u64) -> Result<u64, QueryError> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| QueryError::InvalidParams(format!("`{key}` must be a non-negative integer"))),
    }
}

fn param_time(params: &Value, key: &str) -> Result<Option<Timestamp>, QueryError> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => DateTime::parse_from_rfc3339(s)
            .map(|t| Some(t.to_utc()))
            .map_err(|e| QueryError::InvalidParams(format!("`{key}`: {e}"))),
        Some(_) => Err(QueryError::InvalidParams(format!("`{key}` must be an RFC 3339 string"))),
    }
}

fn top_priority(store: &Store, params: &Value) -> Result<Value, QueryError> {
    let n = param_u64(params, "n", 10)? as usize;
    let rows: Vec<Value> = views::top_priority(store, n)
        .into_iter()
        .map(|f| {
            json!({
                "agg_id": f.agg_id,
                "title": f.canonical_title,
                "effective_priority": f.effective_priority(),
                "severity": f.severity.band,
            })
        })
        .collect();
    Ok(Value::Array(rows))
}

fn open_count(store: &Store, _: &Value) -> Result<Value, QueryError> {
    let n = store.raw_findings().iter().filter(|f| f.status == Status::Open).count();
    Ok(json!(n))
}

fn status_counts(store: &Store, _: &Value) -> Result<Value, QueryError> {
    let mut counts: BTreeMap<Status, u64> = Status::ALL.iter().map(|s| (*s, 0)).collect();
    for f in store.raw_findings() {
        *counts.entry(f.status).or_default() += 1;
    }
    Ok(json!(counts))
}

fn severity_counts(store: &Store, _: &Value) -> Result<Value, QueryError> {
    let mut counts: BTreeMap<SeverityBand, u64> = SeverityBand::ALL.iter().map(|b| (*b, 0)).collect();
    for f in views::aggregated_findings(store) {
        *counts.entry(f.severity.band).or_default() += 1;
    }
    Ok(json!(counts))
}

fn new_findings(store: &Store, params: &Value) -> Result<Value, QueryError> {
    let since = param_time(params, "since")?.ok_or_else(|| QueryError::InvalidParams("`since` is required".into()))?;
    let ids: Vec<&str> = store
        .aggregates()
        .into_iter()
        .filter(|c| c.first_seen >= since)
        .map(|c| c.agg_id.as_str())
        .collect();
    Ok(json!(ids))
}

fn quarantined(store: &Store, _: &Value) -> Result<Value, QueryError> {
    let rows: Vec<Value> = store
        .quarantined()
        .iter()
        .map(|(id, reason)| json!({ "id": id, "reason": reason }))
        .collect();
    Ok(Value::Array(rows))
}
