//! Seeded synthetic reports for tests, examples and benchmarks.
//!
//! A *seed* is one underlying weakness. Tools phrase a seed differently,
//! so the same seed reported by three tools gives three raw findings with
//! different fingerprints and near-duplicate text.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::document::StoreExt;
use crate::ingest::UploadMeta;
use crate::metrics::WeeklySnapshot;
use crate::model::{canonical_fingerprint, FormatTag, Location, RawId, Status, Timestamp, ToolCategory, ToolDescriptor};
use crate::project::{Project, ProjectError};

struct Kind {
    name: &'static str,
    slug: &'static str,
    summary: &'static str,
    cwe: u32,
    severity: &'static str,
    level: &'static str,
}

const KINDS: [Kind; 12] = [
    Kind { name: "SQL injection", slug: "sqli", summary: "query concatenates request input", cwe: 89, severity: "high", level: "error" },
    Kind { name: "Cross-site scripting", slug: "xss", summary: "unescaped markup reflects request data", cwe: 79, severity: "medium", level: "warning" },
    Kind { name: "Path traversal", slug: "traversal", summary: "file name escapes storage directory", cwe: 22, severity: "high", level: "error" },
    Kind { name: "Command injection", slug: "cmdi", summary: "shell arguments built from input", cwe: 78, severity: "critical", level: "error" },
    Kind { name: "Weak hashing", slug: "md5", summary: "md5 digest protects credentials", cwe: 328, severity: "medium", level: "warning" },
    Kind { name: "Unsafe deserialization", slug: "pickle", summary: "pickle loads client payloads", cwe: 502, severity: "high", level: "error" },
    Kind { name: "Hardcoded password", slug: "hardcoded", summary: "password literal embedded in source", cwe: 798, severity: "high", level: "error" },
    Kind { name: "Open redirect", slug: "redirect", summary: "redirect target taken unchecked", cwe: 601, severity: "low", level: "note" },
    Kind { name: "XML external entities", slug: "xxe", summary: "parser expands doctype declarations", cwe: 611, severity: "high", level: "error" },
    Kind { name: "Server-side request forgery", slug: "ssrf", summary: "outbound fetch follows caller url", cwe: 918, severity: "high", level: "error" },
    Kind { name: "Missing CSRF check", slug: "csrf", summary: "form accepts requests without token", cwe: 352, severity: "medium", level: "warning" },
    Kind { name: "Insecure randomness", slug: "random", summary: "tokens drawn from predictable generator", cwe: 330, severity: "low", level: "note" },
];

const DOMAINS: [&str; 30] = [
    "invoice", "customer", "avatar", "payment", "session", "report", "audit", "catalog", "shipping", "inventory",
    "billing", "password", "webhook", "newsletter", "tenant", "coupon", "refund", "upload", "search", "profile",
    "warehouse", "ticket", "calendar", "loyalty", "subscription", "voucher", "courier", "payroll", "feedback",
    "analytics",
];

const COMPONENTS: [&str; 8] = ["handler", "endpoint", "service", "controller", "worker", "exporter", "importer", "resolver"];

const PARAMS: [&str; 16] = [
    "cursor", "filter", "sort", "locale", "callback", "template", "branch", "region", "format", "label", "owner",
    "channel", "scope", "batch", "variant", "origin",
];

const VERBS: [&str; 12] = [
    "load", "render", "sync", "export", "import", "validate", "archive", "notify", "merge", "resolve", "preview", "purge",
];

const OBJECTS: [&str; 12] = [
    "rows", "items", "records", "entries", "drafts", "pages", "links", "files", "batches", "jobs", "notes", "totals",
];

const PACKAGES: [(&str, &str, &str); 20] = [
    ("lodash", "4.17.15", "4.17.21"),
    ("jackson-databind", "2.9.8", "2.9.10"),
    ("log4j-core", "2.14.1", "2.17.1"),
    ("openssl", "1.1.1k", "1.1.1n"),
    ("requests", "2.19.0", "2.20.0"),
    ("pyyaml", "5.3", "5.4"),
    ("minimist", "1.2.0", "1.2.6"),
    ("spring-web", "5.3.17", "5.3.18"),
    ("django", "3.2.4", "3.2.14"),
    ("express", "4.16.0", "4.17.3"),
    ("handlebars", "4.5.1", "4.7.7"),
    ("netty-codec", "4.1.60", "4.1.77"),
    ("pillow", "8.1.0", "9.0.1"),
    ("jsonwebtoken", "8.5.0", "9.0.0"),
    ("commons-text", "1.9", "1.10.0"),
    ("urllib3", "1.25.9", "1.26.5"),
    ("axios", "0.21.0", "0.21.2"),
    ("snakeyaml", "1.29", "1.33"),
    ("xmldom", "0.5.0", "0.7.7"),
    ("tar", "4.4.13", "4.4.19"),
];

const DEP_ISSUES: [&str; 8] = [
    "prototype pollution through crafted merge input",
    "remote code execution through lookup strings",
    "regular expression denial of service",
    "arbitrary file overwrite during archive extraction",
    "authentication bypass with forged signatures",
    "memory exhaustion from oversized frames",
    "server side template injection",
    "certificate validation skipped for redirects",
];

/// One underlying weakness before a tool phrases it.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    Code {
        kind: usize,
        domain: usize,
        component: usize,
        param: usize,
        verb: usize,
        object: usize,
        line: u32,
    },
    Dependency {
        package: usize,
        issue: usize,
        cve: String,
        cvss: f64,
    },
}

impl Seed {
    pub fn category(&self) -> ToolCategory {
        match self {
            Seed::Code { .. } => ToolCategory::StaticAnalysis,
            Seed::Dependency { .. } => ToolCategory::DependencyScan,
        }
    }
}

/// The tools the generator can speak for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SyntheticTool {
    CodeScan,
    SarifLint,
    PatternGuard,
    DepCheck,
    AuditDeps,
    ScaScanner,
}

pub const CODE_TOOLS: [SyntheticTool; 3] = [SyntheticTool::CodeScan, SyntheticTool::SarifLint, SyntheticTool::PatternGuard];
pub const DEP_TOOLS: [SyntheticTool; 3] = [SyntheticTool::DepCheck, SyntheticTool::AuditDeps, SyntheticTool::ScaScanner];

impl SyntheticTool {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticTool::CodeScan => "codescan",
            SyntheticTool::SarifLint => "sarif-lint",
            SyntheticTool::PatternGuard => "patternguard",
            SyntheticTool::DepCheck => "depcheck",
            SyntheticTool::AuditDeps => "audit-deps",
            SyntheticTool::ScaScanner => "sca-scanner",
        }
    }

    pub fn format(self) -> FormatTag {
        match self {
            SyntheticTool::CodeScan | SyntheticTool::PatternGuard => FormatTag::Native,
            SyntheticTool::SarifLint => FormatTag::Sarif,
            _ => FormatTag::DepScan,
        }
    }

    pub fn descriptor(self) -> ToolDescriptor {
        let category = if DEP_TOOLS.contains(&self) {
            ToolCategory::DependencyScan
        } else {
            ToolCategory::StaticAnalysis
        };
        ToolDescriptor {
            name: self.name().to_string(),
            version: "1.0".to_string(),
            category,
        }
    }

    fn rule_id(self, kind: &Kind) -> String {
        match self {
            SyntheticTool::CodeScan => format!("python.security.{}", kind.slug),
            SyntheticTool::SarifLint => format!("py/{}", kind.slug),
            _ => format!("{}-cwe{}", kind.slug, kind.cwe),
        }
    }
}

fn code_path(domain: &str, component: &str, variant: u32) -> String {
    match variant {
        0 => format!("src/{domain}/{component}.py"),
        n => format!("src/{domain}/legacy{n}/{component}.py"),
    }
}

/// Fingerprint-relevant fields of a seed as reported by `tool`.
fn location(tool: SyntheticTool, seed: &Seed, variant: u32) -> (String, Location, Vec<String>) {
    match seed {
        Seed::Code {
            kind, domain, component, ..
        } => {
            let path = code_path(DOMAINS[*domain], COMPONENTS[*component], variant);
            (tool.rule_id(&KINDS[*kind]), Location::file(path, None), Vec::new())
        }
        Seed::Dependency { package, cve, .. } => {
            let (name, version, _) = PACKAGES[*package];
            let manifest = if variant == 0 { "package-lock.json".to_string() } else { format!("services/{variant}/package-lock.json") };
            let loc = Location {
                path: manifest,
                line: None,
                component: Some(name.to_string()),
                component_version: Some(version.to_string()),
            };
            (cve.clone(), loc, vec![cve.clone()])
        }
    }
}

/// The raw id the adapters will compute for this report entry.
pub fn raw_id(project_id: &str, tool: SyntheticTool, seed: &Seed, variant: u32) -> RawId {
    let (rule, loc, cves) = location(tool, seed, variant);
    canonical_fingerprint(project_id, tool.name(), &rule, &loc, &cves).expect("generated fields are complete")
}

fn entry(tool: SyntheticTool, seed: &Seed, variant: u32) -> Value {
    match seed {
        Seed::Code {
            kind,
            domain,
            component,
            param,
            verb,
            object,
            line,
        } => {
            let k = &KINDS[*kind];
            let (d, c, p) = (DOMAINS[*domain], COMPONENTS[*component], PARAMS[*param]);
            let func = format!("{}_{d}_{}", VERBS[*verb], OBJECTS[*object]);
            let path = code_path(d, c, variant);
            let rule = tool.rule_id(k);
            match tool {
                SyntheticTool::SarifLint => json!({
                    "ruleId": rule,
                    "level": k.level,
                    "message": {"text": format!("{d} {c}: {} in {func} ({p} parameter)", k.summary)},
                    "locations": [{"physicalLocation": {
                        "artifactLocation": {"uri": path},
                        "region": {"startLine": line},
                    }}],
                }),
                SyntheticTool::CodeScan => json!({
                    "rule_id": rule,
                    "title": format!("{} in {d} {c}", k.name),
                    "description": format!("The {d} {c} {} in {func}(); see {p} parameter.", k.summary),
                    "location": {"path": path, "line": line},
                    "severity_raw": k.severity,
                    "cwe_ids": [format!("CWE-{}", k.cwe)],
                }),
                _ => json!({
                    "rule_id": rule,
                    "title": format!("Possible {} in {d} {c}", k.name.to_lowercase()),
                    "description": format!("{} ({p} parameter of {func} in {d} {c}).", k.summary),
                    "location": {"path": path, "line": line + 1},
                    "severity_raw": k.severity,
                }),
            }
        }
        Seed::Dependency { package, issue, cve, cvss } => {
            let (name, version, fixed) = PACKAGES[*package];
            let summary = DEP_ISSUES[*issue];
            let manifest_entry = |title: String, description: String| {
                json!({
                    "component": name,
                    "version": version,
                    "cves": [cve],
                    "title": title,
                    "description": description,
                    "cvss": cvss,
                    "fixed_version": fixed,
                })
            };
            match tool {
                SyntheticTool::DepCheck => manifest_entry(format!("{cve} in {name}"), format!("{name} {version} is affected by {summary}.")),
                SyntheticTool::AuditDeps => manifest_entry(format!("{name}: {summary}"), format!("{cve}: {summary}; upgrade {name} to {fixed}.")),
                _ => manifest_entry(format!("Vulnerable dependency {name} {version}"), format!("{summary} in {name} ({cve})")),
            }
        }
    }
}

fn sarif_rules() -> Vec<Value> {
    KINDS
        .iter()
        .map(|k| {
            json!({
                "id": SyntheticTool::SarifLint.rule_id(k),
                "shortDescription": {"text": k.name},
                "properties": {"tags": ["security", format!("external/cwe/cwe-{}", k.cwe)]},
            })
        })
        .collect()
}

/// A rendered report ready for upload.
#[derive(Debug, Clone)]
pub struct SyntheticReport {
    pub tool: SyntheticTool,
    pub scope: String,
    pub received_at: Timestamp,
    pub document: Vec<u8>,
    pub entries: usize,
}

impl SyntheticReport {
    pub fn render(tool: SyntheticTool, scope: &str, received_at: Timestamp, items: &[(&Seed, u32)]) -> Self {
        let entries: Vec<Value> = items.iter().map(|(s, v)| entry(tool, s, *v)).collect();
        let desc = tool.descriptor();
        let doc = match tool.format() {
            FormatTag::Sarif => json!({
                "$schema": "https://json.schemastore.org/sarif-2.1.0.json",
                "version": "2.1.0",
                "runs": [{"tool": {"driver": {"name": desc.name, "version": desc.version, "rules": sarif_rules()}}, "results": entries}],
            }),
            FormatTag::DepScan => json!({
                "tool": {"name": desc.name, "version": desc.version},
                "manifest": if scope.starts_with("services/") { format!("{scope}/package-lock.json") } else { "package-lock.json".to_string() },
                "findings": entries,
            }),
            _ => json!({
                "schema_version": "1",
                "tool": {"name": desc.name, "version": desc.version, "category": desc.category.as_str()},
                "scan": {"scope": scope},
                "findings": entries,
            }),
        };
        Self {
            tool,
            scope: scope.to_string(),
            received_at,
            document: serde_json::to_vec_pretty(&doc).expect("json"),
            entries: items.len(),
        }
    }

    /// Identifies the pipeline run, so identical results from two runs stay distinct.
    pub fn run_id(&self) -> String {
        format!("{}-{}-{}", self.tool.name(), self.scope.replace('/', "_"), self.received_at.timestamp())
    }

    pub fn meta(&self, project_id: &str) -> UploadMeta {
        UploadMeta::new(project_id, self.received_at)
            .with_tool(self.tool.descriptor())
            .with_scope(self.scope.clone())
            .with_report_id(self.run_id())
    }

    pub fn ingest(&self, project: &mut Project) -> Result<crate::project::IngestSummary, ProjectError> {
        let meta = self.meta(project.id());
        project.ingest(&self.document, Some(self.tool.format().as_str()), meta)
    }
}

fn start_time() -> Timestamp {
    Utc.with_ymd_and_hms(2023, 1, 2, 9, 0, 0).single().expect("valid time")
}

/// Distinct code seeds: no two share kind and domain.
fn code_seeds(rng: &mut ChaCha8Rng, n: usize) -> Vec<Seed> {
    let mut pairs: Vec<(usize, usize)> = (0..KINDS.len()).flat_map(|k| (0..DOMAINS.len()).map(move |d| (k, d))).collect();
    assert!(n <= pairs.len(), "at most {} code seeds", pairs.len());
    pairs.shuffle(rng);
    pairs
        .into_iter()
        .take(n)
        .map(|(kind, domain)| Seed::Code {
            kind,
            domain,
            component: rng.gen_range(0..COMPONENTS.len()),
            param: rng.gen_range(0..PARAMS.len()),
            verb: rng.gen_range(0..VERBS.len()),
            object: rng.gen_range(0..OBJECTS.len()),
            line: rng.gen_range(5..400),
        })
        .collect()
}

/// Distinct dependency seeds: no two share package and issue.
fn dep_seeds(rng: &mut ChaCha8Rng, n: usize) -> Vec<Seed> {
    let mut pairs: Vec<(usize, usize)> = (0..PACKAGES.len()).flat_map(|p| (0..DEP_ISSUES.len()).map(move |i| (p, i))).collect();
    pairs.shuffle(rng);
    let mut cves = BTreeSet::new();
    pairs
        .into_iter()
        .take(n)
        .map(|(package, issue)| {
            let cve = loop {
                let c = format!("CVE-{}-{}", rng.gen_range(2018..2024), rng.gen_range(10000..40000));
                if cves.insert(c.clone()) {
                    break c;
                }
            };
            Seed::Dependency {
                package,
                issue,
                cve,
                cvss: f64::from(rng.gen_range(30..=98)) / 10.0,
            }
        })
        .collect()
}

/// Seeds reported as several near-duplicate variants across tools and reports.
#[derive(Debug, Clone)]
pub struct NearDuplicateCorpus {
    pub seeds: Vec<Seed>,
    /// Per seed, its `(tool, variant)` reports.
    pub variants: Vec<Vec<(SyntheticTool, u32)>>,
    pub reports: Vec<SyntheticReport>,
}

impl NearDuplicateCorpus {
    pub fn raw_count(&self) -> usize {
        self.variants.iter().map(Vec::len).sum()
    }

    /// Seed index of every raw id.
    pub fn seed_of(&self, project_id: &str) -> std::collections::BTreeMap<RawId, usize> {
        self.variants
            .iter()
            .enumerate()
            .flat_map(|(i, vs)| vs.iter().map(move |(t, v)| (raw_id(project_id, *t, &self.seeds[i], *v), i)))
            .collect()
    }
}

/// `n_seeds` seeds (three quarters code, the rest dependencies), each with
/// `min_variants..=min_variants + 1` variants, released in three rounds.
/// Every round each tool sends a cumulative report.
pub fn near_duplicate_corpus(seed: u64, n_seeds: usize, min_variants: u32) -> NearDuplicateCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_code = n_seeds * 3 / 4;
    let mut seeds = code_seeds(&mut rng, n_code);
    seeds.extend(dep_seeds(&mut rng, n_seeds - n_code));

    let mut variants = Vec::new();
    let mut round = Vec::new();
    for s in &seeds {
        let family = if s.category() == ToolCategory::StaticAnalysis { CODE_TOOLS } else { DEP_TOOLS };
        let n = min_variants + rng.gen_range(0..=1);
        variants.push((0..n).map(|j| (family[j as usize % 3], j / 3)).collect::<Vec<_>>());
        round.push(rng.gen_range(0..3usize));
    }

    let mut reports = Vec::new();
    for r in 0..3 {
        for (ti, tool) in CODE_TOOLS.iter().chain(DEP_TOOLS.iter()).enumerate() {
            // Dependency variants differ by manifest, which comes from the scope.
            for level in 0..=(min_variants + 1) / 3 {
                let items: Vec<(&Seed, u32)> = seeds
                    .iter()
                    .zip(&variants)
                    .zip(&round)
                    .filter(|(_, &sr)| sr <= r)
                    .flat_map(|((s, vs), _)| vs.iter().filter(|(t, v)| t == tool && *v == level).map(move |(_, v)| (s, *v)))
                    .collect();
                if items.is_empty() {
                    continue;
                }
                let scope = if level == 0 { "default".to_string() } else { format!("services/{level}") };
                let at = start_time() + Duration::days(r as i64) + Duration::minutes(10 * ti as i64 + i64::from(level));
                reports.push(SyntheticReport::render(*tool, &scope, at, &items));
            }
        }
    }
    NearDuplicateCorpus { seeds, variants, reports }
}

/// `n` raw findings: code seeds reported by the three code tools, split
/// into report chunks of `chunk` seeds with their own scope.
pub fn bulk_reports(seed: u64, n: usize, chunk: usize) -> Vec<SyntheticReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds = code_seeds(&mut rng, n.div_ceil(3));
    let mut left = n;
    let mut out = Vec::new();
    let mut at = start_time();
    for (ci, part) in seeds.chunks(chunk.max(1)).enumerate() {
        for tool in CODE_TOOLS {
            let take = part.len().min(left);
            if take == 0 {
                break;
            }
            left -= take;
            let items: Vec<(&Seed, u32)> = part[..take].iter().map(|s| (s, 0)).collect();
            out.push(SyntheticReport::render(tool, &format!("part-{ci}"), at, &items));
            at += Duration::minutes(5);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub enum StreamEvent {
    Report(SyntheticReport),
    Status {
        raw_id: RawId,
        status: Status,
        actor: String,
        at: Timestamp,
    },
    /// Priority for the aggregate that contains `raw_id` at replay time.
    Priority {
        raw_id: RawId,
        value: f64,
        actor: String,
        at: Timestamp,
    },
}

#[derive(Debug, Clone)]
pub struct StreamWeek {
    pub as_of: NaiveDate,
    pub events: Vec<StreamEvent>,
}

pub const STREAM_PROJECT: &str = "synthetic";

/// Ten weeks (or `weeks`) of reports from one native static analyzer, one
/// SARIF linter and one dependency scanner, with findings coming, going,
/// returning and being triaged.
pub fn weekly_stream(seed: u64, weeks: usize) -> Vec<StreamWeek> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let code = code_seeds(&mut rng, 150);
    let deps = dep_seeds(&mut rng, 60);
    let tools = [SyntheticTool::CodeScan, SyntheticTool::SarifLint, SyntheticTool::DepCheck];

    // Per tool: live seed indices, fixed ones, and the unused pool.
    let mut live: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut fixed: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut next_code = 0;
    let mut next_dep = 0;
    let mut reported: Vec<(SyntheticTool, usize)> = Vec::new();

    let pool = |t: usize| if t == 2 { &deps } else { &code };
    let mut out = Vec::new();
    for w in 0..weeks {
        let week_start = start_time() + Duration::weeks(w as i64);
        let mut events = Vec::new();
        for t in 0..3 {
            let adds = if w == 0 { [30, 20, 15][t] } else { rng.gen_range(3..=6) };
            for _ in 0..adds {
                let pick = if t == 1 && rng.gen_bool(0.4) {
                    // The linter confirms something the analyzer already saw.
                    live[0].iter().copied().find(|i| !live[1].contains(i) && !fixed[1].contains(i))
                } else {
                    None
                };
                let idx = pick.unwrap_or_else(|| {
                    let next = if t == 2 { &mut next_dep } else { &mut next_code };
                    *next += 1;
                    *next - 1
                });
                if idx < pool(t).len() && !live[t].contains(&idx) {
                    live[t].push(idx);
                }
            }
            if w > 0 {
                for _ in 0..rng.gen_range(0..=2) {
                    if live[t].len() > 1 {
                        let i = rng.gen_range(0..live[t].len());
                        fixed[t].push(live[t].swap_remove(i));
                    }
                }
                if !fixed[t].is_empty() && rng.gen_bool(0.3) {
                    let i = rng.gen_range(0..fixed[t].len());
                    live[t].push(fixed[t].swap_remove(i));
                }
            }
            // The linter misses one week.
            if t == 1 && w == 4 {
                continue;
            }
            live[t].sort_unstable();
            let items: Vec<(&Seed, u32)> = live[t].iter().map(|&i| (&pool(t)[i], 0)).collect();
            let at = week_start + Duration::hours(t as i64);
            events.push(StreamEvent::Report(SyntheticReport::render(tools[t], "main", at, &items)));
            reported.extend(live[t].iter().map(|&i| (tools[t], i)));
        }
        reported.sort_unstable();
        reported.dedup();

        if w > 0 {
            let at = week_start + Duration::days(2);
            for k in 0..2 {
                let (tool, i) = reported[rng.gen_range(0..reported.len())];
                let seed = if tool == SyntheticTool::DepCheck { &deps[i] } else { &code[i] };
                let status = *[Status::InWork, Status::Accepted, Status::FalsePositive, Status::OnHold, Status::Solved, Status::Invalid]
                    .choose(&mut rng)
                    .expect("non-empty");
                events.push(StreamEvent::Status {
                    raw_id: raw_id(STREAM_PROJECT, tool, seed, 0),
                    status,
                    actor: "dev".into(),
                    at: at + Duration::minutes(k),
                });
            }
            if w == 6 {
                let (tool, i) = reported[0];
                let seed = if tool == SyntheticTool::DepCheck { &deps[i] } else { &code[i] };
                events.push(StreamEvent::Priority {
                    raw_id: raw_id(STREAM_PROJECT, tool, seed, 0),
                    value: 8.5,
                    actor: "lead".into(),
                    at: at + Duration::hours(1),
                });
            }
        }
        let as_of = (week_start + Duration::days(6)).date_naive();
        out.push(StreamWeek { as_of, events });
    }
    out
}

/// Applies the events of one week.
pub fn apply_week(project: &mut Project, week: &StreamWeek) -> Result<(), ProjectError> {
    for e in &week.events {
        match e {
            StreamEvent::Report(r) => {
                r.ingest(project)?;
            }
            StreamEvent::Status { raw_id, status, actor, at } => {
                project.set_status(raw_id.as_str(), *status, actor, *at)?;
            }
            StreamEvent::Priority { raw_id, value, actor, at } => {
                let agg = project
                    .snapshot()
                    .membership()
                    .get(raw_id)
                    .map(|a| a.as_str().to_string())
                    .ok_or_else(|| ProjectError::NotFound(raw_id.to_string()))?;
                project.set_priority(&agg, *value, actor, *at)?;
            }
        }
    }
    Ok(())
}

/// Replays a stream and takes a snapshot at the end of every week.
pub fn replay(project: &mut Project, weeks: &[StreamWeek]) -> Result<Vec<WeeklySnapshot>, ProjectError> {
    let mut out = Vec::new();
    for w in weeks {
        apply_week(project, w)?;
        out.push(project.weekly(w.as_of));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_document, AdapterRegistry};

    #[test]
    fn predicted_raw_ids_match_adapters() {
        let corpus = near_duplicate_corpus(7, 12, 4);
        let expected = corpus.seed_of("p");
        let reg = AdapterRegistry::default();
        let mut seen = BTreeSet::new();
        for r in &corpus.reports {
            let (_, outcome) = parse_document(&reg, &r.document, Some(r.tool.format()), &r.meta("p")).unwrap();
            assert!(outcome.rejected.is_empty(), "{:?}", outcome.rejected);
            for d in outcome.drafts {
                assert!(expected.contains_key(&d.raw_id), "unexpected {} from {}", d.raw_id, r.tool.name());
                seen.insert(d.raw_id);
            }
        }
        assert_eq!(seen.len(), corpus.raw_count());
    }

    #[test]
    fn generation_is_seeded() {
        let a = weekly_stream(3, 4);
        let b = weekly_stream(3, 4);
        let docs = |w: &[StreamWeek]| -> Vec<Vec<u8>> {
            w.iter()
                .flat_map(|w| w.events.iter())
                .filter_map(|e| match e {
                    StreamEvent::Report(r) => Some(r.document.clone()),
                    _ => None,
                })
                .collect()
        };
        assert_eq!(docs(&a), docs(&b));
        assert_ne!(docs(&a), docs(&weekly_stream(4, 4)));
    }

    #[test]
    fn bulk_reports_have_exact_size() {
        let total: usize = bulk_reports(1, 100, 10).iter().map(|r| r.entries).sum();
        assert_eq!(total, 100);
    }

    #[test]
    fn stream_weeks_end_on_sundays() {
        let weeks = weekly_stream(1, 3);
        assert_eq!(weeks[0].as_of, NaiveDate::from_ymd_opt(2023, 1, 8).unwrap());
        assert_eq!(weeks[2].as_of - weeks[1].as_of, Duration::days(7));
    }
}
