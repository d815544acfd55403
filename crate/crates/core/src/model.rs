//! Unified finding data model.
//!
//! Every tool format is mapped onto these types before anything else
//! touches the data. Identity of a finding location is its [`RawId`], a
//! fingerprint over the fields that survive code movement (line numbers
//! are deliberately not part of it).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::ModelError;

pub type Timestamp = DateTime<Utc>;

/// Timestamps are kept at second resolution.
pub fn to_seconds(t: Timestamp) -> Timestamp {
    t.trunc_subsecs(0)
}

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

id_newtype!(
    /// Identifier of an uploaded report.
    ReportId
);
id_newtype!(
    /// Stable fingerprint of one finding location.
    RawId
);
id_newtype!(
    /// Identifier of an aggregated finding (a cluster of raw findings).
    AggId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToolCategory {
    SecretScan,
    StaticAnalysis,
    DependencyScan,
    DynamicTest,
    Other,
}

impl ToolCategory {
    pub const ALL: [ToolCategory; 5] = [
        ToolCategory::SecretScan,
        ToolCategory::StaticAnalysis,
        ToolCategory::DependencyScan,
        ToolCategory::DynamicTest,
        ToolCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolCategory::SecretScan => "secret-scan",
            ToolCategory::StaticAnalysis => "static-analysis",
            ToolCategory::DependencyScan => "dependency-scan",
            ToolCategory::DynamicTest => "dynamic-test",
            ToolCategory::Other => "other",
        }
    }
}

impl FromStr for ToolCategory {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ModelError::UnknownCategory(s.to_string()))
    }
}

impl fmt::Display for ToolCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    #[serde(default)]
    pub version: String,
    pub category: ToolCategory,
}

impl ToolDescriptor {
    pub fn new(
        name: impl Into<String>,
        version: impl Into<String>,
        category: ToolCategory,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ModelError::EmptyToolName);
        }
        Ok(Self {
            name,
            version: version.into(),
            category,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatTag {
    Native,
    Sarif,
    DepScan,
    SecretScan,
}

impl FormatTag {
    pub const ALL: [FormatTag; 4] = [
        FormatTag::Native,
        FormatTag::Sarif,
        FormatTag::DepScan,
        FormatTag::SecretScan,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormatTag::Native => "native",
            FormatTag::Sarif => "sarif",
            FormatTag::DepScan => "dep-scan",
            FormatTag::SecretScan => "secret-scan",
        }
    }
}

impl FromStr for FormatTag {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormatTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ModelError::UnknownFormat(s.to_string()))
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One raw tool output document as received. Never modified after storage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub report_id: ReportId,
    pub project_id: String,
    pub tool: ToolDescriptor,
    pub scan_scope: String,
    pub commit_ref: Option<String>,
    pub received_at: Timestamp,
    #[serde(with = "base64_bytes")]
    pub raw_document: Vec<u8>,
    pub format_tag: FormatTag,
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_version: Option<String>,
}

impl Location {
    pub fn file(path: impl Into<String>, line: Option<u32>) -> Self {
        Self {
            path: path.into(),
            line,
            component: None,
            component_version: None,
        }
    }
}

/// Verification status of one finding location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Open,
    InWork,
    FalsePositive,
    Invalid,
    Accepted,
    Solved,
    OnHold,
    Disappeared,
}

impl Status {
    pub const ALL: [Status; 8] = [
        Status::Open,
        Status::InWork,
        Status::FalsePositive,
        Status::Invalid,
        Status::Accepted,
        Status::Solved,
        Status::OnHold,
        Status::Disappeared,
    ];

    /// `Disappeared` is reserved for the system.
    pub fn user_assignable(self) -> bool {
        self != Status::Disappeared
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Open => "Open",
            Status::InWork => "InWork",
            Status::FalsePositive => "FalsePositive",
            Status::Invalid => "Invalid",
            Status::Accepted => "Accepted",
            Status::Solved => "Solved",
            Status::OnHold => "OnHold",
            Status::Disappeared => "Disappeared",
        }
    }
}

impl FromStr for Status {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Status::ALL
            .into_iter()
            .find(|st| st.as_str().to_ascii_lowercase() == norm)
            .ok_or_else(|| ModelError::UnknownStatus(s.to_string()))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetBy {
    System,
    User,
}

/// A decimal on the 0.0-10.0 scale, held in tenths so band boundaries are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Score(u16);

impl Score {
    pub const MAX: Score = Score(100);
    pub const ZERO: Score = Score(0);

    pub fn from_tenths(tenths: u16) -> Result<Self, ModelError> {
        if tenths > 100 {
            return Err(ModelError::ScoreOutOfRange(f64::from(tenths) / 10.0));
        }
        Ok(Score(tenths))
    }

    /// Rounds to one decimal. Rejects non-finite values and anything outside `[0, 10]`.
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if !value.is_finite() || !(0.0..=10.0).contains(&value) {
            return Err(ModelError::ScoreOutOfRange(value));
        }
        Ok(Score((value * 10.0).round() as u16))
    }

    pub fn tenths(self) -> u16 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    /// Adds `delta_tenths` and caps the result at 10.0.
    pub fn saturating_add_tenths(self, delta_tenths: u16) -> Score {
        Score((self.0 + delta_tenths).min(100))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Score::new(v).map_err(serde::de::Error::custom)
    }
}

/// CVSS v3.1 qualitative bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeverityBand {
    Info,
    Low,
    Medium,
    High,
    Critical,
}

impl SeverityBand {
    pub const ALL: [SeverityBand; 5] = [
        SeverityBand::Info,
        SeverityBand::Low,
        SeverityBand::Medium,
        SeverityBand::High,
        SeverityBand::Critical,
    ];

    pub fn from_score(score: Score) -> SeverityBand {
        match score.tenths() {
            90..=100 => SeverityBand::Critical,
            70..=89 => SeverityBand::High,
            40..=69 => SeverityBand::Medium,
            1..=39 => SeverityBand::Low,
            _ => SeverityBand::Info,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityBand::Info => "Info",
            SeverityBand::Low => "Low",
            SeverityBand::Medium => "Medium",
            SeverityBand::High => "High",
            SeverityBand::Critical => "Critical",
        }
    }
}

impl FromStr for SeverityBand {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeverityBand::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownSeverity(s.to_string()))
    }
}

impl fmt::Display for SeverityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A band together with its numeric score. The band is always derived
/// from the score, so the two can't disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeverityLevel {
    pub band: SeverityBand,
    pub score: Score,
    /// Set when neither a known label nor a CVSS score was available.
    #[serde(default)]
    pub unscored: bool,
}

impl SeverityLevel {
    pub fn from_score(score: Score) -> Self {
        Self {
            band: SeverityBand::from_score(score),
            score,
            unscored: false,
        }
    }

    fn unscored() -> Self {
        Self {
            unscored: true,
            ..Self::from_score(Score(50))
        }
    }
}

/// Score for a tool's textual severity label, if the label is known.
pub fn label_score(label: &str) -> Option<Score> {
    let tenths = match label.trim().to_ascii_lowercase().as_str() {
        "critical" | "blocker" => 95,
        "high" | "error" => 75,
        "medium" | "warning" | "moderate" => 50,
        "low" | "minor" => 20,
        "info" | "note" | "informational" => 0,
        _ => return None,
    };
    Some(Score(tenths))
}

/// Maps a tool's severity label and/or CVSS base score onto the common scale.
///
/// CVSS wins over the label. With neither (or an unknown label and no CVSS)
/// the result is Medium flagged as unscored.
pub fn normalize_severity(label: Option<&str>, cvss: Option<f64>) -> Result<SeverityLevel, ModelError> {
    if let Some(cvss) = cvss {
        let score = Score::new(cvss).map_err(|_| ModelError::CvssOutOfRange(cvss))?;
        return Ok(SeverityLevel::from_score(score));
    }
    Ok(label
        .and_then(label_score)
        .map(SeverityLevel::from_score)
        .unwrap_or_else(SeverityLevel::unscored))
}

/// Computes the stable identity of a finding location.
///
/// The key is `(project, tool name, rule id, path, component, component
/// version, sorted CVE ids)`. Each field is length-prefixed before hashing
/// so distinct tuples never share an encoding.
pub fn canonical_fingerprint(
    project_id: &str,
    tool_name: &str,
    rule_id: &str,
    location: &Location,
    cve_ids: &[String],
) -> Result<RawId, ModelError> {
    let mut missing = Vec::new();
    if tool_name.trim().is_empty() {
        missing.push("tool.name");
    }
    if rule_id.trim().is_empty() {
        missing.push("rule_id");
    }
    if location.path.trim().is_empty() {
        missing.push("location.path");
    }
    if !missing.is_empty() {
        return Err(ModelError::MissingFields(
            missing.into_iter().map(String::from).collect(),
        ));
    }

    let cves: BTreeSet<&str> = cve_ids.iter().map(String::as_str).collect();
    let mut hasher = Sha256::new();
    let mut feed = |tag: u8, field: Option<&str>| {
        hasher.update([tag]);
        match field {
            Some(v) => {
                hasher.update([1]);
                hasher.update((v.len() as u64).to_be_bytes());
                hasher.update(v.as_bytes());
            }
            None => hasher.update([0]),
        }
    };
    feed(b'p', Some(project_id));
    feed(b't', Some(tool_name));
    feed(b'r', Some(rule_id));
    feed(b'l', Some(&location.path));
    feed(b'c', location.component.as_deref());
    feed(b'v', location.component_version.as_deref());
    feed(b'n', Some(&cves.len().to_string()));
    for cve in cves {
        feed(b'e', Some(cve));
    }
    let digest = hasher.finalize();
    Ok(RawId(format!("raw-{}", hex::encode(&digest[..16]))))
}

/// A parsed finding entry before it is merged into the knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingDraft {
    pub raw_id: RawId,
    pub project_id: String,
    pub tool: ToolDescriptor,
    pub rule_id: String,
    pub title: String,
    pub description: String,
    pub location: Location,
    pub severity_raw: Option<String>,
    pub cvss: Option<f64>,
    pub cwe_ids: Vec<String>,
    pub cve_ids: Vec<String>,
    /// Version fixing a vulnerable dependency, when the tool reports one.
    pub fixed_version: Option<String>,
    pub severity: SeverityLevel,
}

/// Field set a parser collects for one entry.
#[derive(Debug, Clone, Default)]
pub struct DraftFields {
    pub rule_id: String,
    pub title: String,
    pub description: String,
    pub location: Option<Location>,
    pub severity_raw: Option<String>,
    pub cvss: Option<f64>,
    pub cwe_ids: Vec<String>,
    pub cve_ids: Vec<String>,
    pub fixed_version: Option<String>,
}

impl FindingDraft {
    pub fn build(project_id: &str, tool: &ToolDescriptor, fields: DraftFields) -> Result<Self, ModelError> {
        let location = fields
            .location
            .ok_or_else(|| ModelError::MissingFields(vec!["location.path".into()]))?;
        if location.line == Some(0) {
            return Err(ModelError::InvalidLine);
        }
        let raw_id = canonical_fingerprint(project_id, &tool.name, &fields.rule_id, &location, &fields.cve_ids)?;
        let severity = normalize_severity(fields.severity_raw.as_deref(), fields.cvss)?;
        Ok(Self {
            raw_id,
            project_id: project_id.to_string(),
            tool: tool.clone(),
            title: if fields.title.is_empty() {
                fields.rule_id.clone()
            } else {
                fields.title
            },
            rule_id: fields.rule_id,
            description: fields.description,
            location,
            severity_raw: fields.severity_raw,
            cvss: fields.cvss,
            cwe_ids: fields.cwe_ids,
            cve_ids: fields.cve_ids,
            fixed_version: fields.fixed_version,
            severity,
        })
    }

    /// Text used for semantic comparison.
    pub fn semantic_text(&self) -> String {
        format!("{} {} {}", self.title, self.description, self.rule_id)
    }
}

/// Attestation scope of a report: the tool and the scanned branch/target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScopeKey {
    pub tool: String,
    pub scope: String,
}

/// One finding location with its history and status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFinding {
    pub raw_id: RawId,
    pub project_id: String,
    pub tool: ToolDescriptor,
    pub rule_id: String,
    pub title: String,
    pub description: String,
    pub location: Location,
    pub severity_raw: Option<String>,
    pub cvss: Option<f64>,
    pub cwe_ids: Vec<String>,
    pub cve_ids: Vec<String>,
    pub fixed_version: Option<String>,
    pub status: Status,
    pub status_set_by: SetBy,
    pub first_seen: Timestamp,
    pub last_seen: Timestamp,
    pub occurrence_count: u32,
    pub report_ids: Vec<ReportId>,
    /// Consecutive relevant reports this finding was missing from.
    pub absence_count: u32,
    pub sources: BTreeSet<ScopeKey>,
}

impl RawFinding {
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.first_seen > self.last_seen {
            return Err(format!("{}: first_seen after last_seen", self.raw_id));
        }
        if self.occurrence_count as usize != self.report_ids.len() || self.occurrence_count == 0 {
            return Err(format!("{}: occurrence count mismatch", self.raw_id));
        }
        if self.status == Status::Disappeared && self.status_set_by != SetBy::System {
            return Err(format!("{}: Disappeared not set by system", self.raw_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichmentNote {
    pub rule_name: String,
    pub title: String,
    pub text: String,
}

/// A cluster of semantically equivalent raw findings, as presented to users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedFinding {
    pub agg_id: AggId,
    pub project_id: String,
    pub member_raw_ids: BTreeSet<RawId>,
    pub canonical_title: String,
    pub canonical_description: String,
    pub rule_id: String,
    pub tool: ToolDescriptor,
    pub location: Location,
    pub cwe_ids: Vec<String>,
    pub cve_ids: Vec<String>,
    pub enrichment_notes: Vec<EnrichmentNote>,
    pub severity: SeverityLevel,
    pub priority: Option<Score>,
    pub priority_set_by: Option<String>,
    pub suggested_priority: Score,
    pub first_seen: Timestamp,
}

impl AggregatedFinding {
    /// The user assignment if present, otherwise the suggestion.
    pub fn effective_priority(&self) -> Score {
        self.priority.unwrap_or(self.suggested_priority)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_critical_maps_to_9_5() {
        let lvl = normalize_severity(Some("CRITICAL"), None).unwrap();
        assert_eq!(lvl.band, SeverityBand::Critical);
        assert_eq!(lvl.score, Score::new(9.5).unwrap());
        assert!(!lvl.unscored);
    }

    #[test]
    fn cvss_band_lookup() {
        // CVSS v3.1 qualitative table, written out independently of from_score.
        let table: &[(f64, SeverityBand)] = &[
            (0.0, SeverityBand::Info),
            (0.1, SeverityBand::Low),
            (3.9, SeverityBand::Low),
            (4.0, SeverityBand::Medium),
            (6.9, SeverityBand::Medium),
            (7.0, SeverityBand::High),
            (8.9, SeverityBand::High),
            (9.0, SeverityBand::Critical),
            (9.8, SeverityBand::Critical),
            (10.0, SeverityBand::Critical),
        ];
        for &(cvss, band) in table {
            assert_eq!(normalize_severity(None, Some(cvss)).unwrap().band, band, "cvss {cvss}");
        }
    }

    #[test]
    fn cvss_beats_label() {
        let lvl = normalize_severity(Some("low"), Some(9.8)).unwrap();
        assert_eq!(lvl.band, SeverityBand::Critical);
    }

    #[test]
    fn missing_inputs_fall_back_to_unscored_medium() {
        let lvl = normalize_severity(None, None).unwrap();
        assert_eq!(lvl.band, SeverityBand::Medium);
        assert!(lvl.unscored);
        let lvl = normalize_severity(Some("spicy"), None).unwrap();
        assert_eq!(lvl.band, SeverityBand::Medium);
        assert!(lvl.unscored);
    }

    #[test]
    fn cvss_out_of_range_rejected() {
        assert!(matches!(normalize_severity(None, Some(10.5)), Err(ModelError::CvssOutOfRange(_))));
        assert!(normalize_severity(None, Some(-0.1)).is_err());
        assert!(normalize_severity(None, Some(f64::NAN)).is_err());
    }

    #[test]
    fn label_table() {
        for (label, tenths) in [
            ("blocker", 95),
            ("High", 75),
            ("error", 75),
            ("moderate", 50),
            ("warning", 50),
            ("minor", 20),
            ("low", 20),
            ("note", 0),
            ("info", 0),
        ] {
            assert_eq!(label_score(label), Some(Score(tenths)), "{label}");
        }
    }

    fn loc(path: &str, line: Option<u32>) -> Location {
        Location::file(path, line)
    }

    #[test]
    fn fingerprint_ignores_line() {
        let a = canonical_fingerprint("p", "gosec", "G101", &loc("a.go", Some(10)), &[]).unwrap();
        let b = canonical_fingerprint("p", "gosec", "G101", &loc("a.go", Some(14)), &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fingerprint_path_and_cve_order() {
        let a = canonical_fingerprint("p", "gosec", "G101", &loc("a.go", None), &[]).unwrap();
        let b = canonical_fingerprint("p", "gosec", "G101", &loc("b.go", None), &[]).unwrap();
        assert_ne!(a, b);
        let c1 = canonical_fingerprint("p", "t", "r", &loc("x", None), &["CVE-2".into(), "CVE-1".into()]).unwrap();
        let c2 = canonical_fingerprint("p", "t", "r", &loc("x", None), &["CVE-1".into(), "CVE-2".into()]).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn fingerprint_lists_missing_fields() {
        let err = canonical_fingerprint("p", "", "", &loc("", None), &[]).unwrap_err();
        match err {
            ModelError::MissingFields(f) => {
                assert_eq!(f, vec!["tool.name", "rule_id", "location.path"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn status_parse_and_assignability() {
        assert_eq!("In Work".parse::<Status>().unwrap(), Status::InWork);
        assert_eq!("false-positive".parse::<Status>().unwrap(), Status::FalsePositive);
        assert_eq!(Status::ALL.iter().filter(|s| s.user_assignable()).count(), 7);
    }

    #[test]
    fn tool_name_required() {
        assert!(ToolDescriptor::new("  ", "1", ToolCategory::Other).is_err());
    }

    #[test]
    fn score_serde_is_decimal() {
        let s = Score::new(8.5).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "8.5");
        assert!(serde_json::from_str::<Score>("11").is_err());
    }
}
