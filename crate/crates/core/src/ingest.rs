//! Report parsers.
//!
//! Each supported tool format has a [`FormatAdapter`] that validates the
//! document envelope and turns its entries into [`FindingDraft`]s. Parsing
//! is pure; invalid entries are collected as [`DocumentIssue`]s and the
//! rest of the report is kept.
//!
//! | tag           | document                                                    |
//! |---------------|-------------------------------------------------------------|
//! | `native`      | `{schema_version:"1", tool, scan, findings:[...]}`          |
//! | `sarif`       | SARIF 2.1.0, one draft per `runs[].results[]`               |
//! | `dep-scan`    | `{tool?, manifest?, findings:[{component, version, cves, cvss, ...}]}` |
//! | `secret-scan` | `{tool?, findings:[{rule, path, line, secret_hash, ...}]}`  |

use std::collections::BTreeMap;

use regex::Regex;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{DocumentIssue, IngestError};
use crate::model::{
    to_seconds, DraftFields, FindingDraft, FormatTag, Location, ReportId, SecurityReport, Timestamp, ToolCategory,
    ToolDescriptor,
};

/// Upload parameters that accompany a document.
#[derive(Debug, Clone)]
pub struct UploadMeta {
    pub project_id: String,
    pub report_id: Option<ReportId>,
    /// Tool declared by the uploader. Formats that carry their own tool
    /// name ignore the name but use the category when the document has none.
    pub tool: Option<ToolDescriptor>,
    pub scan_scope: Option<String>,
    pub commit_ref: Option<String>,
    pub received_at: Timestamp,
}

impl UploadMeta {
    pub fn new(project_id: impl Into<String>, received_at: Timestamp) -> Self {
        Self {
            project_id: project_id.into(),
            report_id: None,
            tool: None,
            scan_scope: None,
            commit_ref: None,
            received_at,
        }
    }

    pub fn with_tool(mut self, tool: ToolDescriptor) -> Self {
        self.tool = Some(tool);
        self
    }

    pub fn with_scope(mut self, scope: impl Into<String>) -> Self {
        self.scan_scope = Some(scope.into());
        self
    }

    pub fn with_report_id(mut self, id: impl Into<String>) -> Self {
        self.report_id = Some(ReportId::new(id));
        self
    }
}

/// Envelope fields an adapter reads from the document itself.
#[derive(Debug, Clone, Default)]
pub struct EnvelopeMeta {
    pub tool: Option<ToolDescriptor>,
    pub scan_scope: Option<String>,
    pub commit_ref: Option<String>,
}

/// Drafts produced from one report, plus the entries that were rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub drafts: Vec<FindingDraft>,
    pub rejected: Vec<DocumentIssue>,
    pub entry_count: usize,
}

impl ParseOutcome {
    fn push(&mut self, entry: Result<FindingDraft, DocumentIssue>) {
        self.entry_count += 1;
        match entry {
            Ok(d) => self.drafts.push(d),
            Err(e) => self.rejected.push(e),
        }
    }

    /// Partial acceptance: a report is rejected only when it had entries and none survived.
    fn finish(self) -> Result<Self, IngestError> {
        if self.entry_count > 0 && self.drafts.is_empty() {
            return Err(IngestError::NoValidEntries(self.rejected));
        }
        Ok(self)
    }
}

pub trait FormatAdapter: Send + Sync {
    fn tag(&self) -> &'static str;

    /// Checks the document envelope and extracts report-level metadata.
    fn validate(&self, doc: &Value) -> Result<EnvelopeMeta, Vec<DocumentIssue>>;

    fn parse(&self, report: &SecurityReport, doc: &Value) -> Result<ParseOutcome, IngestError>;
}

/// Adapters keyed by format tag.
pub struct AdapterRegistry {
    adapters: BTreeMap<&'static str, Box<dyn FormatAdapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(NativeAdapter));
        reg.register(Box::new(SarifAdapter));
        reg.register(Box::new(DepScanAdapter));
        reg.register(Box::new(SecretScanAdapter));
        reg
    }
}

impl AdapterRegistry {
    pub fn empty() -> Self {
        Self {
            adapters: BTreeMap::new(),
        }
    }

    /// Registers an adapter. Returns false if the tag is already taken.
    pub fn register(&mut self, adapter: Box<dyn FormatAdapter>) -> bool {
        let tag = adapter.tag();
        if self.adapters.contains_key(tag) {
            return false;
        }
        self.adapters.insert(tag, adapter);
        true
    }

    pub fn tags(&self) -> Vec<&'static str> {
        self.adapters.keys().copied().collect()
    }

    pub fn get(&self, tag: &str) -> Result<&dyn FormatAdapter, IngestError> {
        self.adapters
            .get(tag)
            .map(|a| a.as_ref())
            .ok_or_else(|| IngestError::UnknownAdapter {
                tag: tag.to_string(),
                known: self.tags().into_iter().map(String::from).collect(),
            })
    }

    /// Parses a stored report with the adapter for `tag`.
    pub fn parse_adapter(&self, tag: &str, report: &SecurityReport) -> Result<ParseOutcome, IngestError> {
        let adapter = self.get(tag)?;
        let doc = parse_json(&report.raw_document).map_err(|i| IngestError::Invalid(vec![i]))?;
        adapter.parse(report, &doc)
    }

    pub fn parse_report(&self, report: &SecurityReport) -> Result<ParseOutcome, IngestError> {
        self.parse_adapter(report.format_tag.as_str(), report)
    }
}

fn parse_json(document: &[u8]) -> Result<Value, DocumentIssue> {
    if document.iter().all(u8::is_ascii_whitespace) {
        return Err(DocumentIssue::new("", "empty document"));
    }
    serde_json::from_slice(document)
        .map_err(|e| DocumentIssue::new("", format!("malformed JSON at line {} column {}: {e}", e.line(), e.column())))
}

/// Decides which format a document is in.
///
/// Native documents carry `schema_version`; SARIF carries `$schema` naming
/// sarif or a `version` + `runs` pair. Anything else falls back to the
/// declared tag. A declared tag that contradicts the markers is an error.
pub fn detect_format(document: &[u8], declared: Option<FormatTag>) -> Result<FormatTag, IngestError> {
    let detected = serde_json::from_slice::<Value>(document)
        .ok()
        .and_then(|v| v.as_object().and_then(detect_markers));
    match (detected, declared) {
        (Some(d), Some(decl)) if d != decl => Err(IngestError::FormatMismatch {
            declared: decl.to_string(),
            detected: d.to_string(),
        }),
        (Some(d), _) => Ok(d),
        (None, Some(decl)) => Ok(decl),
        (None, None) => Err(IngestError::Undetectable),
    }
}

fn detect_markers(obj: &Map<String, Value>) -> Option<FormatTag> {
    if obj.contains_key("schema_version") {
        return Some(FormatTag::Native);
    }
    let schema_says_sarif = obj
        .get("$schema")
        .and_then(Value::as_str)
        .is_some_and(|s| s.to_ascii_lowercase().contains("sarif"));
    if schema_says_sarif || (obj.contains_key("version") && obj.contains_key("runs")) {
        return Some(FormatTag::Sarif);
    }
    None
}

/// Schema-checks an uploaded document and builds the report to store.
///
/// Nothing is stored when this fails.
pub fn validate_report(
    registry: &AdapterRegistry,
    document: &[u8],
    declared: Option<FormatTag>,
    meta: &UploadMeta,
) -> Result<SecurityReport, IngestError> {
    let doc = parse_json(document).map_err(|i| IngestError::Invalid(vec![i]))?;
    let format = detect_format(document, declared)?;
    let adapter = registry.get(format.as_str())?;
    let envelope = adapter.validate(&doc).map_err(IngestError::Invalid)?;

    let tool = match (envelope.tool, &meta.tool) {
        (Some(mut t), Some(declared)) => {
            if t.category == ToolCategory::Other {
                t.category = declared.category;
            }
            t
        }
        (Some(t), None) => t,
        (None, Some(t)) => t.clone(),
        (None, None) => {
            return Err(IngestError::Invalid(vec![DocumentIssue::new(
                "/tool/name",
                "missing mandatory field tool.name",
            )]))
        }
    };
    if meta.project_id.trim().is_empty() {
        return Err(IngestError::Invalid(vec![DocumentIssue::new("", "missing project id")]));
    }
    let scan_scope = meta
        .scan_scope
        .clone()
        .or(envelope.scan_scope)
        .unwrap_or_else(|| "default".to_string());
    let commit_ref = meta.commit_ref.clone().or(envelope.commit_ref);
    let report_id = meta.report_id.clone().unwrap_or_else(|| {
        let mut h = Sha256::new();
        for part in [meta.project_id.as_bytes(), format.as_str().as_bytes(), tool.name.as_bytes(), scan_scope.as_bytes()] {
            h.update((part.len() as u64).to_be_bytes());
            h.update(part);
        }
        h.update(document);
        ReportId(format!("rep-{}", hex::encode(&h.finalize()[..16])))
    });

    Ok(SecurityReport {
        report_id,
        project_id: meta.project_id.clone(),
        tool,
        scan_scope,
        commit_ref,
        received_at: to_seconds(meta.received_at),
        raw_document: document.to_vec(),
        format_tag: format,
    })
}

/// Validates and parses in one step. Used by tools that don't go through the store.
pub fn parse_document(
    registry: &AdapterRegistry,
    document: &[u8],
    declared: Option<FormatTag>,
    meta: &UploadMeta,
) -> Result<(SecurityReport, ParseOutcome), IngestError> {
    let report = validate_report(registry, document, declared, meta)?;
    let outcome = registry.parse_report(&report)?;
    Ok((report, outcome))
}

pub fn parse_native(report: &SecurityReport) -> Result<ParseOutcome, IngestError> {
    AdapterRegistry::default().parse_adapter(FormatTag::Native.as_str(), report)
}

pub fn parse_sarif(report: &SecurityReport) -> Result<ParseOutcome, IngestError> {
    AdapterRegistry::default().parse_adapter(FormatTag::Sarif.as_str(), report)
}

// ---- JSON helpers ----------------------------------------------------------

fn opt_str(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Option<String>, DocumentIssue> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(DocumentIssue::new(format!("{at}/{key}"), "expected a string")),
    }
}

fn req_str(obj: &Map<String, Value>, key: &str, at: &str) -> Result<String, DocumentIssue> {
    match opt_str(obj, key, at)? {
        Some(s) if !s.trim().is_empty() => Ok(s),
        _ => Err(DocumentIssue::new(format!("{at}/{key}"), format!("missing mandatory field {key}"))),
    }
}

fn opt_f64(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Option<f64>, DocumentIssue> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => Ok(n.as_f64()),
        Some(Value::String(s)) => s
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|_| DocumentIssue::new(format!("{at}/{key}"), "expected a number")),
        Some(_) => Err(DocumentIssue::new(format!("{at}/{key}"), "expected a number")),
    }
}

fn opt_line(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Option<u32>, DocumentIssue> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .filter(|&n| n >= 1 && n <= u64::from(u32::MAX))
            .map(|n| Some(n as u32))
            .ok_or_else(|| DocumentIssue::new(format!("{at}/{key}"), "line must be an integer >= 1")),
    }
}

fn str_list(obj: &Map<String, Value>, key: &str, at: &str) -> Result<Vec<String>, DocumentIssue> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.as_str()
                    .map(String::from)
                    .ok_or_else(|| DocumentIssue::new(format!("{at}/{key}/{i}"), "expected a string"))
            })
            .collect(),
        Some(_) => Err(DocumentIssue::new(format!("{at}/{key}"), "expected an array of strings")),
    }
}

fn as_object<'a>(v: &'a Value, at: &str) -> Result<&'a Map<String, Value>, DocumentIssue> {
    v.as_object()
        .ok_or_else(|| DocumentIssue::new(at, "expected an object"))
}

fn findings_array<'a>(obj: &'a Map<String, Value>, at: &str) -> Result<&'a Vec<Value>, DocumentIssue> {
    match obj.get("findings") {
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(DocumentIssue::new(format!("{at}/findings"), "expected an array")),
        None => Err(DocumentIssue::new(format!("{at}/findings"), "missing mandatory field findings")),
    }
}

/// Reads an optional `{name, version, category?}` tool object.
fn tool_object(
    obj: &Map<String, Value>,
    default_category: ToolCategory,
    require_name: bool,
) -> Result<Option<ToolDescriptor>, Vec<DocumentIssue>> {
    let tool = match obj.get("tool") {
        None | Some(Value::Null) if !require_name => return Ok(None),
        None | Some(Value::Null) => {
            return Err(vec![DocumentIssue::new("/tool/name", "missing mandatory field tool.name")])
        }
        Some(v) => as_object(v, "/tool").map_err(|e| vec![e])?,
    };
    let mut issues = Vec::new();
    let name = req_str(tool, "name", "/tool").map_err(|e| issues.push(e)).ok();
    let version = opt_str(tool, "version", "/tool")
        .map_err(|e| issues.push(e))
        .ok()
        .flatten()
        .unwrap_or_default();
    let category = match opt_str(tool, "category", "/tool") {
        Ok(Some(c)) => c
            .parse::<ToolCategory>()
            .map_err(|_| issues.push(DocumentIssue::new("/tool/category", format!("unknown category `{c}`"))))
            .ok(),
        Ok(None) => Some(default_category),
        Err(e) => {
            issues.push(e);
            None
        }
    };
    if !issues.is_empty() {
        return Err(issues);
    }
    Ok(Some(ToolDescriptor {
        name: name.unwrap_or_default(),
        version,
        category: category.unwrap_or(default_category),
    }))
}

// ---- native ----------------------------------------------------------------

pub struct NativeAdapter;

impl FormatAdapter for NativeAdapter {
    fn tag(&self) -> &'static str {
        FormatTag::Native.as_str()
    }

    fn validate(&self, doc: &Value) -> Result<EnvelopeMeta, Vec<DocumentIssue>> {
        let obj = as_object(doc, "").map_err(|e| vec![e])?;
        let mut issues = Vec::new();
        match obj.get("schema_version") {
            Some(Value::String(v)) if v == "1" => {}
            Some(other) => issues.push(DocumentIssue::new(
                "/schema_version",
                format!("unsupported schema_version {other}"),
            )),
            None => issues.push(DocumentIssue::new("/schema_version", "missing mandatory field schema_version")),
        }
        let tool = match tool_object(obj, ToolCategory::Other, true) {
            Ok(t) => t,
            Err(mut e) => {
                issues.append(&mut e);
                None
            }
        };
        let (mut scope, mut commit) = (None, None);
        match obj.get("scan") {
            None | Some(Value::Null) => {}
            Some(Value::Object(scan)) => {
                scope = opt_str(scan, "scope", "/scan").map_err(|e| issues.push(e)).ok().flatten();
                commit = opt_str(scan, "commit", "/scan").map_err(|e| issues.push(e)).ok().flatten();
            }
            Some(_) => issues.push(DocumentIssue::new("/scan", "expected an object")),
        }
        if let Err(e) = findings_array(obj, "") {
            issues.push(e);
        }
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(EnvelopeMeta {
            tool,
            scan_scope: scope,
            commit_ref: commit,
        })
    }

    fn parse(&self, report: &SecurityReport, doc: &Value) -> Result<ParseOutcome, IngestError> {
        let obj = as_object(doc, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let entries = findings_array(obj, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let mut out = ParseOutcome::default();
        for (i, entry) in entries.iter().enumerate() {
            let at = format!("/findings/{i}");
            out.push(native_entry(report, entry, &at));
        }
        out.finish()
    }
}

fn native_entry(report: &SecurityReport, entry: &Value, at: &str) -> Result<FindingDraft, DocumentIssue> {
    let e = as_object(entry, at)?;
    let rule_id = req_str(e, "rule_id", at)?;
    let loc_at = format!("{at}/location");
    let loc = match e.get("location") {
        Some(v) => as_object(v, &loc_at)?,
        None => return Err(DocumentIssue::new(&loc_at, "missing mandatory field location")),
    };
    let location = Location {
        path: req_str(loc, "path", &loc_at)?,
        line: opt_line(loc, "line", &loc_at)?,
        component: opt_str(loc, "component", &loc_at)?,
        component_version: opt_str(loc, "component_version", &loc_at)?,
    };
    let fields = DraftFields {
        rule_id,
        title: opt_str(e, "title", at)?.unwrap_or_default(),
        description: opt_str(e, "description", at)?.unwrap_or_default(),
        location: Some(location),
        severity_raw: opt_str(e, "severity_raw", at)?,
        cvss: opt_f64(e, "cvss", at)?,
        cwe_ids: str_list(e, "cwe_ids", at)?,
        cve_ids: str_list(e, "cve_ids", at)?,
        fixed_version: e
            .get("extra")
            .and_then(Value::as_object)
            .and_then(|x| x.get("fixed_version"))
            .and_then(Value::as_str)
            .map(String::from),
    };
    FindingDraft::build(&report.project_id, &report.tool, fields).map_err(|err| DocumentIssue::new(at, err.to_string()))
}

// ---- SARIF -----------------------------------------------------------------

pub struct SarifAdapter;

const SARIF_VERSION: &str = "2.1.0";

impl FormatAdapter for SarifAdapter {
    fn tag(&self) -> &'static str {
        FormatTag::Sarif.as_str()
    }

    fn validate(&self, doc: &Value) -> Result<EnvelopeMeta, Vec<DocumentIssue>> {
        let obj = as_object(doc, "").map_err(|e| vec![e])?;
        match obj.get("version").and_then(Value::as_str) {
            Some(SARIF_VERSION) => {}
            Some(v) => {
                return Err(vec![DocumentIssue::new(
                    "/version",
                    format!("unsupported SARIF version {v}"),
                )])
            }
            None => return Err(vec![DocumentIssue::new("/version", "missing SARIF version")]),
        }
        let runs = match obj.get("runs") {
            Some(Value::Array(r)) => r,
            _ => return Err(vec![DocumentIssue::new("/runs", "expected an array of runs")]),
        };
        let mut issues = Vec::new();
        let mut first_tool = None;
        for (i, run) in runs.iter().enumerate() {
            let at = format!("/runs/{i}/tool/driver");
            match run.pointer("/tool/driver").and_then(Value::as_object) {
                Some(driver) => match req_str(driver, "name", &at) {
                    Ok(name) if first_tool.is_none() => {
                        let version = driver_version(driver);
                        first_tool = Some(ToolDescriptor {
                            name,
                            version,
                            category: ToolCategory::StaticAnalysis,
                        });
                    }
                    Ok(_) => {}
                    Err(e) => issues.push(e),
                },
                None => issues.push(DocumentIssue::new(&at, "missing tool.driver")),
            }
        }
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(EnvelopeMeta {
            tool: first_tool,
            ..Default::default()
        })
    }

    fn parse(&self, report: &SecurityReport, doc: &Value) -> Result<ParseOutcome, IngestError> {
        self.validate(doc).map_err(IngestError::Invalid)?;
        let mut out = ParseOutcome::default();
        let runs = doc["runs"].as_array().map(Vec::as_slice).unwrap_or_default();
        for (ri, run) in runs.iter().enumerate() {
            let driver = &run["tool"]["driver"];
            let tool = ToolDescriptor {
                name: driver["name"].as_str().unwrap_or_default().to_string(),
                version: driver.as_object().map(driver_version).unwrap_or_default(),
                category: report.tool.category,
            };
            let rules = SarifRules::new(driver);
            let results = run.get("results").and_then(Value::as_array).map(Vec::as_slice).unwrap_or_default();
            for (i, result) in results.iter().enumerate() {
                let at = format!("/runs/{ri}/results/{i}");
                out.push(sarif_result(report, &tool, &rules, result, &at));
            }
        }
        out.finish()
    }
}

fn driver_version(driver: &Map<String, Value>) -> String {
    driver
        .get("semanticVersion")
        .or_else(|| driver.get("version"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

struct SarifRules<'a> {
    by_index: Vec<&'a Value>,
    by_id: BTreeMap<&'a str, &'a Value>,
}

impl<'a> SarifRules<'a> {
    fn new(driver: &'a Value) -> Self {
        let by_index: Vec<&Value> = driver
            .get("rules")
            .and_then(Value::as_array)
            .map(|r| r.iter().collect())
            .unwrap_or_default();
        let by_id = by_index
            .iter()
            .filter_map(|r| r.get("id").and_then(Value::as_str).map(|id| (id, *r)))
            .collect();
        Self { by_index, by_id }
    }

    fn lookup(&self, result: &Value, rule_id: &str) -> Option<&'a Value> {
        result
            .get("ruleIndex")
            .and_then(Value::as_u64)
            .and_then(|i| self.by_index.get(i as usize).copied())
            .or_else(|| self.by_id.get(rule_id).copied())
    }
}

fn cwe_regex() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)cwe[-_/]?0*(\d+)").expect("valid regex"))
}

fn sarif_result(
    report: &SecurityReport,
    tool: &ToolDescriptor,
    rules: &SarifRules<'_>,
    result: &Value,
    at: &str,
) -> Result<FindingDraft, DocumentIssue> {
    as_object(result, at)?;
    let rule_id = result
        .get("ruleId")
        .or_else(|| result.pointer("/rule/id"))
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| DocumentIssue::new(format!("{at}/ruleId"), "result without ruleId"))?
        .to_string();
    let rule = rules.lookup(result, &rule_id);

    let level = result
        .get("level")
        .and_then(Value::as_str)
        .or_else(|| rule.and_then(|r| r.pointer("/defaultConfiguration/level")).and_then(Value::as_str))
        .unwrap_or("warning");

    let security_severity = [result.pointer("/properties/security-severity"), rule.and_then(|r| r.pointer("/properties/security-severity"))]
        .into_iter()
        .flatten()
        .find_map(|v| match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        });

    let physical = result
        .pointer("/locations/0/physicalLocation")
        .ok_or_else(|| DocumentIssue::new(format!("{at}/locations"), "result without physical location"))?;
    let path = physical
        .pointer("/artifactLocation/uri")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| DocumentIssue::new(format!("{at}/locations/0/physicalLocation/artifactLocation/uri"), "missing artifact uri"))?;
    let line = match physical.pointer("/region/startLine") {
        None => None,
        Some(v) => Some(
            v.as_u64()
                .filter(|&n| n >= 1 && n <= u64::from(u32::MAX))
                .ok_or_else(|| DocumentIssue::new(format!("{at}/locations/0/physicalLocation/region/startLine"), "line must be an integer >= 1"))?
                as u32,
        ),
    };

    let message = result.pointer("/message/text").and_then(Value::as_str).unwrap_or_default();
    let title = rule
        .and_then(|r| r.pointer("/shortDescription/text").or_else(|| r.get("name")))
        .and_then(Value::as_str)
        .unwrap_or(&rule_id)
        .to_string();
    let description = if message.is_empty() {
        rule.and_then(|r| r.pointer("/fullDescription/text"))
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string()
    } else {
        message.to_string()
    };
    let mut cwe_ids: Vec<String> = rule
        .and_then(|r| r.pointer("/properties/tags"))
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(Value::as_str)
        .filter_map(|t| cwe_regex().captures(t).map(|c| format!("CWE-{}", &c[1])))
        .collect();
    cwe_ids.dedup();

    let fields = DraftFields {
        rule_id,
        title,
        description,
        location: Some(Location::file(path, line)),
        severity_raw: Some(level.to_string()),
        cvss: security_severity,
        cwe_ids,
        cve_ids: Vec::new(),
        fixed_version: None,
    };
    FindingDraft::build(&report.project_id, tool, fields).map_err(|err| DocumentIssue::new(at, err.to_string()))
}

// ---- dependency scan -------------------------------------------------------

/// Dependency audit output: one entry per vulnerable component.
///
/// The dependency coordinate goes to `location.component`/`component_version`;
/// `location.path` is the manifest the component came from.
pub struct DepScanAdapter;

impl FormatAdapter for DepScanAdapter {
    fn tag(&self) -> &'static str {
        FormatTag::DepScan.as_str()
    }

    fn validate(&self, doc: &Value) -> Result<EnvelopeMeta, Vec<DocumentIssue>> {
        let obj = as_object(doc, "").map_err(|e| vec![e])?;
        let mut tool = tool_object(obj, ToolCategory::DependencyScan, false)?;
        if let Some(t) = tool.as_mut() {
            t.category = ToolCategory::DependencyScan;
        }
        findings_array(obj, "").map_err(|e| vec![e])?;
        Ok(EnvelopeMeta {
            tool,
            ..Default::default()
        })
    }

    fn parse(&self, report: &SecurityReport, doc: &Value) -> Result<ParseOutcome, IngestError> {
        let obj = as_object(doc, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let manifest = obj
            .get("manifest")
            .and_then(Value::as_str)
            .filter(|s| !s.is_empty())
            .unwrap_or("dependencies");
        let entries = findings_array(obj, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let mut out = ParseOutcome::default();
        for (i, entry) in entries.iter().enumerate() {
            let at = format!("/findings/{i}");
            out.push(dep_entry(report, manifest, entry, &at));
        }
        out.finish()
    }
}

fn dep_entry(report: &SecurityReport, manifest: &str, entry: &Value, at: &str) -> Result<FindingDraft, DocumentIssue> {
    let e = as_object(entry, at)?;
    let component = req_str(e, "component", at)?;
    let version = opt_str(e, "version", at)?;
    let mut cves = str_list(e, "cves", at)?;
    cves.sort();
    let advisory = opt_str(e, "advisory", at)?;
    let rule_id = advisory
        .or_else(|| cves.first().cloned())
        .ok_or_else(|| DocumentIssue::new(format!("{at}/cves"), "entry needs an advisory id or at least one CVE"))?;
    let title = opt_str(e, "title", at)?.unwrap_or_else(|| format!("{rule_id} in {component}"));
    let fields = DraftFields {
        rule_id,
        title,
        description: opt_str(e, "description", at)?.unwrap_or_default(),
        location: Some(Location {
            path: manifest.to_string(),
            line: None,
            component: Some(component),
            component_version: version,
        }),
        severity_raw: opt_str(e, "severity", at)?,
        cvss: opt_f64(e, "cvss", at)?,
        cwe_ids: str_list(e, "cwe_ids", at)?,
        cve_ids: cves,
        fixed_version: opt_str(e, "fixed_version", at)?,
    };
    let tool = ToolDescriptor {
        category: ToolCategory::DependencyScan,
        ..report.tool.clone()
    };
    FindingDraft::build(&report.project_id, &tool, fields).map_err(|err| DocumentIssue::new(at, err.to_string()))
}

// ---- secret scan -----------------------------------------------------------

/// Secret scanner output. The secret digest is folded into the rule id so two
/// different secrets matched by the same rule in one file stay distinct.
pub struct SecretScanAdapter;

impl FormatAdapter for SecretScanAdapter {
    fn tag(&self) -> &'static str {
        FormatTag::SecretScan.as_str()
    }

    fn validate(&self, doc: &Value) -> Result<EnvelopeMeta, Vec<DocumentIssue>> {
        let obj = as_object(doc, "").map_err(|e| vec![e])?;
        let mut tool = tool_object(obj, ToolCategory::SecretScan, false)?;
        if let Some(t) = tool.as_mut() {
            t.category = ToolCategory::SecretScan;
        }
        findings_array(obj, "").map_err(|e| vec![e])?;
        Ok(EnvelopeMeta {
            tool,
            ..Default::default()
        })
    }

    fn parse(&self, report: &SecurityReport, doc: &Value) -> Result<ParseOutcome, IngestError> {
        let obj = as_object(doc, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let entries = findings_array(obj, "").map_err(|e| IngestError::Invalid(vec![e]))?;
        let mut out = ParseOutcome::default();
        for (i, entry) in entries.iter().enumerate() {
            let at = format!("/findings/{i}");
            out.push(secret_entry(report, entry, &at));
        }
        out.finish()
    }
}

fn secret_entry(report: &SecurityReport, entry: &Value, at: &str) -> Result<FindingDraft, DocumentIssue> {
    let e = as_object(entry, at)?;
    let rule = req_str(e, "rule", at)?;
    let digest = req_str(e, "secret_hash", at)?;
    let short: String = digest.chars().take(16).collect();
    let fields = DraftFields {
        rule_id: format!("{rule}#{short}"),
        title: opt_str(e, "title", at)?.unwrap_or_else(|| format!("Secret detected: {rule}")),
        description: opt_str(e, "description", at)?.unwrap_or_default(),
        location: Some(Location::file(req_str(e, "path", at)?, opt_line(e, "line", at)?)),
        severity_raw: opt_str(e, "severity", at)?,
        cvss: None,
        cwe_ids: vec!["CWE-798".to_string()],
        cve_ids: Vec::new(),
        fixed_version: None,
    };
    let tool = ToolDescriptor {
        category: ToolCategory::SecretScan,
        ..report.tool.clone()
    };
    FindingDraft::build(&report.project_id, &tool, fields).map_err(|err| DocumentIssue::new(at, err.to_string()))
}
