use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use triagebase::dedup::{tokenize, LsiModel, term_counts};
use triagebase::document::StoreExt;
use triagebase::enrich::{enrich_notes, load_rules, FindingFields};
use triagebase::model::{canonical_fingerprint, normalize_severity, Location, SeverityBand, ToolCategory, ToolDescriptor};
use triagebase::project::{Project, ProjectSettings};
use triagebase::synthetic::near_duplicate_corpus;

type Key = (String, String, String, String, Option<String>, Option<String>, BTreeSet<String>);

fn field() -> impl Strategy<Value = String> {
    // Small alphabet with separators, so collisions of naive encodings are likely.
    "[ab|:/0]{1,4}"
}

fn key() -> impl Strategy<Value = Key> {
    (
        field(),
        field(),
        field(),
        field(),
        prop::option::of(field()),
        prop::option::of(field()),
        prop::collection::btree_set("CVE-[0-9]{1,2}", 0..3),
    )
}

fn fingerprint(k: &Key) -> String {
    let loc = Location {
        component: k.4.clone(),
        component_version: k.5.clone(),
        ..Location::file(k.3.clone(), None)
    };
    let cves: Vec<String> = k.6.iter().cloned().collect();
    canonical_fingerprint(&k.0, &k.1, &k.2, &loc, &cves).unwrap().0
}

proptest! {
    #[test]
    fn fingerprint_is_injective(a in key(), b in key()) {
        prop_assert_eq!(a == b, fingerprint(&a) == fingerprint(&b));
    }

    #[test]
    fn fingerprint_ignores_cve_order(k in key()) {
        let loc = Location::file(k.3.clone(), None);
        let fwd: Vec<String> = k.6.iter().cloned().collect();
        let rev: Vec<String> = k.6.iter().rev().cloned().collect();
        prop_assert_eq!(
            canonical_fingerprint(&k.0, &k.1, &k.2, &loc, &fwd).unwrap(),
            canonical_fingerprint(&k.0, &k.1, &k.2, &loc, &rev).unwrap()
        );
    }

    #[test]
    fn severity_is_total(label in prop::option::of(".{0,12}"), cvss in prop::option::of(0.0f64..=10.0)) {
        let lvl = normalize_severity(label.as_deref(), cvss).unwrap();
        prop_assert!(SeverityBand::ALL.contains(&lvl.band));
        prop_assert_eq!(lvl.band, SeverityBand::from_score(lvl.score));
        prop_assert!(lvl.score.value() >= 0.0 && lvl.score.value() <= 10.0);
    }

    #[test]
    fn cvss_out_of_range_is_rejected(cvss in prop_oneof![-100.0f64..-0.01, 10.01f64..100.0]) {
        prop_assert!(normalize_severity(Some("high"), Some(cvss)).is_err());
    }

    #[test]
    fn enrichment_is_idempotent(
        title in "[a-z ]{0,30}",
        path in "[a-z/]{1,20}",
        needle in "[a-z]{1,3}",
        category in prop::sample::select(ToolCategory::ALL.to_vec()),
    ) {
        let rules = format!(
            r#"{{"rules": [
                {{"name": "t", "if": {{"field": "title", "op": "contains", "value": "{needle}"}}, "add": [{{"title": "T", "text": "about {{title}}"}}]}},
                {{"name": "p", "if": {{"field": "path", "op": "matches", "value": "^[a-m]"}}, "add": [{{"title": "P", "text": "x"}}, {{"title": "Q", "text": "y"}}]}}
            ]}}"#
        );
        let (rules, warnings) = load_rules(Some(&rules));
        prop_assert!(warnings.is_empty());
        let tool = ToolDescriptor::new("scanner", "1.0", category).unwrap();
        let location = Location::file(path, Some(3));
        let f = FindingFields { title: &title, description: "", rule_id: "r", tool: &tool, location: &location, cwe_ids: &[], cve_ids: &[] };
        let once = enrich_notes(&f, &rules, &[]);
        let twice = enrich_notes(&f, &rules, &once);
        prop_assert_eq!(&once, &twice);
        let names: BTreeSet<&str> = once.iter().map(|n| n.rule_name.as_str()).collect();
        prop_assert_eq!(names.len(), once.len());
    }

    #[test]
    fn lsi_projections_are_unit_or_zero(docs in prop::collection::vec("[a-f]{1,3}( [a-f]{1,3}){0,6}", 1..12)) {
        let corpus: Vec<_> = docs.iter().map(|d| term_counts(d)).collect();
        let model = LsiModel::build(&corpus, 100);
        for d in &corpus {
            let v = model.project(d);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm.abs() < 1e-9 || (norm - 1.0).abs() < 1e-9, "norm {norm}");
        }
    }

    #[test]
    fn tokens_are_lowercase_words(text in ".{0,60}") {
        for t in tokenize(&text) {
            prop_assert!(!t.is_empty());
            prop_assert_eq!(t.to_lowercase(), t.clone());
            prop_assert!(t.chars().all(char::is_alphanumeric));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn clusters_partition_raw_findings(seed in 0u64..1000) {
        let corpus = near_duplicate_corpus(seed, 10, 3);
        let mut p = Project::in_memory("part", ProjectSettings::default()).unwrap();
        for r in &corpus.reports {
            r.ingest(&mut p).unwrap();
        }
        let store = p.snapshot();
        let raw: BTreeSet<_> = store.raw_findings().iter().map(|f| f.raw_id.clone()).collect();
        let mut owner = BTreeMap::new();
        for agg in store.aggregates() {
            prop_assert!(!agg.members.is_empty());
            for m in agg.members.keys() {
                prop_assert!(owner.insert(m.clone(), agg.agg_id.clone()).is_none(), "{m} in two clusters");
            }
        }
        prop_assert_eq!(raw, owner.keys().cloned().collect::<BTreeSet<_>>());
        // Near duplicates of one seed never land with another seed.
        let seed_of = corpus.seed_of("part");
        let mut seeds_per_cluster: BTreeMap<_, BTreeSet<usize>> = BTreeMap::new();
        for (raw_id, agg) in &owner {
            seeds_per_cluster.entry(agg).or_default().insert(seed_of[raw_id]);
        }
        prop_assert!(seeds_per_cluster.values().all(|s| s.len() == 1));
    }
}
