//! Rule-based enrichment of aggregated findings.
//!
//! A rule is `if <field> <op> <value> then add <notes>`. Rules come from a
//! per-project JSON file:
//!
//! ```json
//! {"rules": [{"name": "log4j",
//!             "if": {"field": "component", "op": "equals", "value": "log4j-core"},
//!             "add": [{"title": "Upgrade", "text": "Bump <Component> in <Path>."}]}]}
//! ```
//!
//! The built-in tool explanation rule always runs first.

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{AggregatedFinding, EnrichmentNote, Location, ToolCategory, ToolDescriptor};

pub const TOOL_EXPLANATION_RULE: &str = "tool-explanation";
pub const TOOL_EXPLANATION_TITLE: &str = "How was this found?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Title,
    Description,
    RuleId,
    Tool,
    ToolCategory,
    Path,
    Component,
    Cwe,
    Cve,
}

impl Field {
    fn parse(s: &str) -> Option<Field> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }
}

#[derive(Debug, Clone)]
pub enum Op {
    Equals(String),
    Contains(String),
    Matches(Regex),
}

#[derive(Debug, Clone)]
pub struct Condition {
    pub field: Field,
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoteText {
    Template(String),
    /// Per-category text from [`default_tool_explanation`].
    ToolExplanation,
}

#[derive(Debug, Clone)]
pub struct EnrichmentRule {
    pub name: String,
    /// `None` matches every finding.
    pub condition: Option<Condition>,
    pub title: String,
    pub text: NoteText,
}

impl EnrichmentRule {
    pub fn tool_explanation() -> Self {
        Self {
            name: TOOL_EXPLANATION_RULE.to_string(),
            condition: None,
            title: TOOL_EXPLANATION_TITLE.to_string(),
            text: NoteText::ToolExplanation,
        }
    }
}

/// The fields rules can look at.
#[derive(Debug, Clone, Copy)]
pub struct FindingFields<'a> {
    pub title: &'a str,
    pub description: &'a str,
    pub rule_id: &'a str,
    pub tool: &'a ToolDescriptor,
    pub location: &'a Location,
    pub cwe_ids: &'a [String],
    pub cve_ids: &'a [String],
}

impl<'a> From<&'a AggregatedFinding> for FindingFields<'a> {
    fn from(f: &'a AggregatedFinding) -> Self {
        Self {
            title: &f.canonical_title,
            description: &f.canonical_description,
            rule_id: &f.rule_id,
            tool: &f.tool,
            location: &f.location,
            cwe_ids: &f.cwe_ids,
            cve_ids: &f.cve_ids,
        }
    }
}

impl FindingFields<'_> {
    fn values(&self, field: Field) -> Vec<&str> {
        match field {
            Field::Title => vec![self.title],
            Field::Description => vec![self.description],
            Field::RuleId => vec![self.rule_id],
            Field::Tool => vec![self.tool.name.as_str()],
            Field::ToolCategory => vec![self.tool.category.as_str()],
            Field::Path => vec![self.location.path.as_str()],
            Field::Component => self.location.component.as_deref().into_iter().collect(),
            Field::Cwe => self.cwe_ids.iter().map(String::as_str).collect(),
            Field::Cve => self.cve_ids.iter().map(String::as_str).collect(),
        }
    }
}

impl Condition {
    /// List fields (CWE, CVE) match when any element does.
    pub fn matches(&self, f: &FindingFields<'_>) -> bool {
        f.values(self.field).into_iter().any(|v| match &self.op {
            Op::Equals(x) => v.eq_ignore_ascii_case(x),
            Op::Contains(x) => v.to_lowercase().contains(&x.to_lowercase()),
            Op::Matches(re) => re.is_match(v),
        })
    }
}

/// Explanation text for a tool's category with `<Tool>` filled in.
pub fn default_tool_explanation(tool: &ToolDescriptor) -> String {
    let template = match tool.category {
        ToolCategory::DependencyScan => {
            "The tool <Tool> identified this finding, by querying each of your dependencies in public \
             vulnerability databases. If a vulnerability is found for a component, it creates a finding."
        }
        ToolCategory::SecretScan => {
            "The tool <Tool> searched the repository contents for strings that look like credentials, \
             such as keys, tokens and passwords. Each match is reported with its file and line."
        }
        ToolCategory::StaticAnalysis => {
            "The tool <Tool> inspected the source code without running it and matched it against its rule \
             set. The rule id names the pattern that fired."
        }
        ToolCategory::DynamicTest => {
            "The tool <Tool> sent requests to a running instance of the application and reported a \
             response that indicated a weakness."
        }
        ToolCategory::Other => "The tool <Tool> reported this finding.",
    };
    template.replace("<Tool>", &tool.name)
}

/// Fills `<Tool>`, `<Component>`, `<Path>`, `<RuleId>` and `<Title>`.
/// Unknown placeholders are left as written.
pub fn expand_placeholders(text: &str, f: &FindingFields<'_>) -> String {
    text.replace("<Tool>", &f.tool.name)
        .replace("<Component>", f.location.component.as_deref().unwrap_or(&f.location.path))
        .replace("<Path>", &f.location.path)
        .replace("<RuleId>", f.rule_id)
        .replace("<Title>", f.title)
}

fn note_for(rule: &EnrichmentRule, f: &FindingFields<'_>) -> EnrichmentNote {
    let text = match &rule.text {
        NoteText::Template(t) => expand_placeholders(t, f),
        NoteText::ToolExplanation => default_tool_explanation(f.tool),
    };
    EnrichmentNote {
        rule_name: rule.name.clone(),
        title: rule.title.clone(),
        text,
    }
}

/// Appends one note per matching rule, in rule order, skipping rules that
/// already left a note.
pub fn enrich_notes(f: &FindingFields<'_>, rules: &[EnrichmentRule], existing: &[EnrichmentNote]) -> Vec<EnrichmentNote> {
    let mut notes = existing.to_vec();
    for rule in rules {
        if notes.iter().any(|n| n.rule_name == rule.name) {
            continue;
        }
        if rule.condition.as_ref().is_none_or(|c| c.matches(f)) {
            notes.push(note_for(rule, f));
        }
    }
    notes
}

/// Returns the finding with notes from every matching rule. Only
/// `enrichment_notes` changes.
pub fn apply_enrichment(finding: &AggregatedFinding, rules: &[EnrichmentRule]) -> AggregatedFinding {
    let notes = enrich_notes(&FindingFields::from(finding), rules, &finding.enrichment_notes);
    AggregatedFinding {
        enrichment_notes: notes,
        ..finding.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleWarning {
    pub index: usize,
    pub message: String,
}

#[derive(Deserialize)]
struct RawRule {
    name: Option<String>,
    #[serde(rename = "if")]
    condition: Option<RawCondition>,
    #[serde(default)]
    add: Vec<RawNote>,
}

#[derive(Deserialize)]
struct RawCondition {
    field: String,
    op: String,
    value: String,
}

#[derive(Deserialize)]
struct RawNote {
    title: String,
    text: String,
}

fn parse_rule(value: Value) -> Result<EnrichmentRule, String> {
    let raw: RawRule = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let name = raw.name.filter(|n| !n.trim().is_empty()).ok_or("rule without name")?;
    let condition = match raw.condition {
        None => None,
        Some(c) => {
            let field = Field::parse(&c.field).ok_or_else(|| format!("unknown field `{}`", c.field))?;
            let op = match c.op.as_str() {
                "equals" => Op::Equals(c.value),
                "contains" => Op::Contains(c.value),
                "matches" => Op::Matches(Regex::new(&c.value).map_err(|e| format!("bad pattern: {e}"))?),
                other => return Err(format!("unknown operator `{other}`")),
            };
            Some(Condition { field, op })
        }
    };
    if raw.add.is_empty() {
        return Err(format!("rule `{name}` adds nothing"));
    }
    // Several additions fold into one note so each rule leaves exactly one.
    let title = raw.add[0].title.clone();
    let text = raw.add.iter().map(|n| n.text.as_str()).collect::<Vec<_>>().join("\n\n");
    Ok(EnrichmentRule {
        name,
        condition,
        title,
        text: NoteText::Template(text),
    })
}

/// Parses a rule file. Malformed rules are skipped and reported; a file
/// that is not a rule document at all is an error.
pub fn parse_rule_file(source: &str) -> Result<(Vec<EnrichmentRule>, Vec<RuleWarning>), String> {
    let doc: Value = serde_json::from_str(source).map_err(|e| format!("rule file is not JSON: {e}"))?;
    let Some(list) = doc.get("rules").and_then(Value::as_array) else {
        return Err("rule file has no `rules` array".into());
    };
    let mut rules: Vec<EnrichmentRule> = Vec::new();
    let mut warnings = Vec::new();
    for (index, v) in list.iter().enumerate() {
        match parse_rule(v.clone()) {
            Ok(r) if r.name == TOOL_EXPLANATION_RULE || rules.iter().any(|x| x.name == r.name) => warnings.push(RuleWarning {
                index,
                message: format!("duplicate rule name `{}`", r.name),
            }),
            Ok(r) => rules.push(r),
            Err(message) => warnings.push(RuleWarning { index, message }),
        }
    }
    for w in &warnings {
        tracing::warn!(index = w.index, message = %w.message, "skipping enrichment rule");
    }
    Ok((rules, warnings))
}

/// The built-in rule followed by the rules of `source`, if any.
pub fn load_rules(source: Option<&str>) -> (Vec<EnrichmentRule>, Vec<RuleWarning>) {
    let mut rules = vec![EnrichmentRule::tool_explanation()];
    let mut warnings = Vec::new();
    if let Some(src) = source {
        match parse_rule_file(src) {
            Ok((r, w)) => {
                rules.extend(r);
                warnings = w;
            }
            Err(message) => {
                tracing::warn!(%message, "ignoring enrichment rule file");
                warnings.push(RuleWarning { index: 0, message });
            }
        }
    }
    (rules, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Utc;
    use std::collections::BTreeSet;

    fn finding(category: ToolCategory) -> AggregatedFinding {
        AggregatedFinding {
            agg_id: crate::model::AggId::new("agg-000001"),
            project_id: "p".into(),
            member_raw_ids: BTreeSet::from([crate::model::RawId::new("raw-1")]),
            canonical_title: "Outdated library".into(),
            canonical_description: "Known issue".into(),
            rule_id: "CVE-2021-0001".into(),
            tool: ToolDescriptor::new("depcheck", "1.0", category).unwrap(),
            location: Location {
                path: "pom.xml".into(),
                line: None,
                component: Some("libx".into()),
                component_version: Some("1.2".into()),
            },
            cwe_ids: vec!["CWE-79".into()],
            cve_ids: vec!["CVE-2021-0001".into()],
            enrichment_notes: vec![],
            severity: crate::model::SeverityLevel::from_score(crate::model::Score::new(9.8).unwrap()),
            priority: None,
            priority_set_by: None,
            suggested_priority: crate::model::Score::new(9.8).unwrap(),
            first_seen: Utc::now(),
        }
    }

    #[test]
    fn dependency_explanation_names_the_tool() {
        let f = apply_enrichment(&finding(ToolCategory::DependencyScan), &load_rules(None).0);
        assert_eq!(f.enrichment_notes.len(), 1);
        let note = &f.enrichment_notes[0];
        assert_eq!(note.title, TOOL_EXPLANATION_TITLE);
        assert!(note.text.starts_with("The tool depcheck identified this finding, by querying each of your dependencies"));
        assert!(!note.text.contains("<Tool>"));
    }

    #[test]
    fn other_category_gets_generic_text() {
        let t = ToolDescriptor::new("x", "", ToolCategory::Other).unwrap();
        assert_eq!(default_tool_explanation(&t), "The tool x reported this finding.");
        assert_eq!(default_tool_explanation(&t), default_tool_explanation(&t));
    }

    #[test]
    fn no_matching_rule_leaves_finding_unchanged() {
        let (rules, w) = parse_rule_file(
            r#"{"rules":[{"name":"r","if":{"field":"tool","op":"equals","value":"zap"},"add":[{"title":"t","text":"x"}]}]}"#,
        )
        .unwrap();
        assert!(w.is_empty());
        let f = finding(ToolCategory::DependencyScan);
        assert_eq!(apply_enrichment(&f, &rules), f);
    }

    #[test]
    fn two_matches_keep_registration_order() {
        let src = r#"{"rules":[
            {"name":"second","if":{"field":"cve","op":"matches","value":"^CVE-2021-"},"add":[{"title":"A","text":"Upgrade <Component> in <Path>"}]},
            {"name":"third","if":{"field":"title","op":"contains","value":"outdated"},"add":[{"title":"B","text":"<RuleId>"},{"title":"ignored","text":"more"}]}
        ]}"#;
        let (rules, _) = load_rules(Some(src));
        let f = apply_enrichment(&finding(ToolCategory::DependencyScan), &rules);
        let names: Vec<&str> = f.enrichment_notes.iter().map(|n| n.rule_name.as_str()).collect();
        assert_eq!(names, [TOOL_EXPLANATION_RULE, "second", "third"]);
        assert_eq!(f.enrichment_notes[1].text, "Upgrade libx in pom.xml");
        assert_eq!(f.enrichment_notes[2].text, "CVE-2021-0001\n\nmore");
    }

    #[test]
    fn malformed_rules_are_skipped() {
        let src = r#"{"rules":[
            {"name":"bad-field","if":{"field":"nope","op":"equals","value":"x"},"add":[{"title":"t","text":"x"}]},
            {"name":"bad-op","if":{"field":"tool","op":"near","value":"x"},"add":[{"title":"t","text":"x"}]},
            {"name":"bad-re","if":{"field":"tool","op":"matches","value":"("},"add":[{"title":"t","text":"x"}]},
            {"if":{"field":"tool","op":"equals","value":"x"},"add":[{"title":"t","text":"x"}]},
            {"name":"ok","add":[{"title":"t","text":"x"}]}
        ]}"#;
        let (rules, warnings) = parse_rule_file(src).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(warnings.iter().map(|w| w.index).collect::<Vec<_>>(), [0, 1, 2, 3]);
        assert!(parse_rule_file("[]").is_err());
    }
}
