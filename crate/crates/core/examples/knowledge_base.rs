//! The knowledge base on its own, with a toy payload: sensor readings in,
//! alerts and a running alert count derived by two strata of rules.
//!
//! cargo run -p triagebase --example knowledge_base

use std::collections::BTreeSet;

use chrono::{TimeZone, Utc};
use serde_json::{json, Value};
use triagebase::kb::{Belief, BeliefId, BeliefStore, Derivation, KnowledgeBase, NewBelief, Revision, Rule, RuleError, Schema};

struct Alerts;

impl Rule<Value> for Alerts {
    fn name(&self) -> &'static str {
        "alerts"
    }
    fn stratum(&self) -> u32 {
        1
    }
    fn triggers(&self) -> &'static [&'static str] {
        &["reading"]
    }
    fn produces(&self) -> &'static [&'static str] {
        &["alert"]
    }
    fn fire(&self, inputs: &[&Belief<Value>], _: &BeliefStore<Value>) -> Result<Vec<Derivation<Value>>, RuleError> {
        let mut out = Vec::new();
        for b in inputs {
            let celsius = b.payload["celsius"].as_f64().ok_or_else(|| RuleError::new("reading without celsius"))?;
            if celsius > 80.0 {
                out.push(Derivation {
                    id: BeliefId::new(format!("alert:{}", b.id.as_str())),
                    class: "alert",
                    payload: json!({"sensor": b.payload["sensor"], "celsius": celsius}),
                    derived_from: BTreeSet::from([b.id.clone()]),
                });
            }
        }
        Ok(out)
    }
}

struct AlertCount;

impl Rule<Value> for AlertCount {
    fn name(&self) -> &'static str {
        "alert-count"
    }
    fn stratum(&self) -> u32 {
        2
    }
    fn triggers(&self) -> &'static [&'static str] {
        &["alert"]
    }
    fn produces(&self) -> &'static [&'static str] {
        &["alert_count"]
    }
    fn fire(&self, _: &[&Belief<Value>], store: &BeliefStore<Value>) -> Result<Vec<Derivation<Value>>, RuleError> {
        let alerts: BTreeSet<_> = store.class("alert").map(|b| b.id.clone()).collect();
        Ok(vec![Derivation {
            id: BeliefId::new("alert_count"),
            class: "alert_count",
            payload: json!(alerts.len()),
            derived_from: alerts,
        }])
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut schema = Schema::new(["reading"]);
    schema.add_rule(Box::new(Alerts))?.add_rule(Box::new(AlertCount))?;
    let mut kb = KnowledgeBase::new(schema);

    let t = |m| Utc.with_ymd_and_hms(2024, 5, 1, 12, m, 0).unwrap();
    let trace = kb.commit(vec![
        NewBelief::new("r1", "reading", json!({"sensor": "boiler", "celsius": 91.5}), t(0)),
        NewBelief::new("r2", "reading", json!({"sensor": "intake", "celsius": 21.0}), t(0)),
        NewBelief::new("r3", "reading", json!({"sensor": "pump", "celsius": 84.0}), t(1)),
    ])?;
    println!("first batch fired: {:?}", trace.rule_names());
    println!("alerts: {}", kb.store().get_str("alert_count").unwrap().payload);

    // Correcting a reading re-derives everything that depended on it.
    kb.revise(&BeliefId::new("r3"), Revision::Replace { payload: json!({"sensor": "pump", "celsius": 60.0}), at: t(2) })?;
    println!("after correcting r3: {} alert(s)", kb.store().get_str("alert_count").unwrap().payload);

    let snapshot = kb.committed();
    kb.commit(vec![NewBelief::new("r4", "reading", json!({"sensor": "fan", "celsius": 99.0}), t(3))])?;
    println!(
        "old snapshot still sees {} alert(s), the live store {}",
        snapshot.get_str("alert_count").unwrap().payload,
        kb.store().get_str("alert_count").unwrap().payload
    );

    // A rule error rolls the batch back and quarantines its inputs.
    let err = kb.commit(vec![NewBelief::new("r5", "reading", json!({"sensor": "bad"}), t(4))]).unwrap_err();
    println!("rejected batch: {err}");
    kb.store().check_provenance()?;
    Ok(())
}
