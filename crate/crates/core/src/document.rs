//! Belief payloads of the triage knowledge base and typed store readers.
//!
//! | class                | origin   | stratum | id                     |
//! |----------------------|----------|---------|------------------------|
//! | `SecurityReport`     | external | 0       | `report:<report_id>`   |
//! | `UserInput`          | external | 0       | `input-<seq>`          |
//! | `EnrichmentConfig`   | external | 0       | `enrichment-<seq>`     |
//! | `ParsedReport`       | derived  | 1       | `parsed:<report_id>`   |
//! | `AggregatedFinding`  | derived  | 2       | `<agg_id>`             |
//! | `SemanticIndex`      | derived  | 2       | `semantic-index`       |
//! | `EnrichmentNotes`    | derived  | 3       | `notes:<agg_id>`       |
//! | `RawFinding`         | derived  | 4       | `<raw_id>`             |
//! | `StatusChange`       | derived  | 4       | `change-<seq>`         |
//! | `SeverityAssessment` | derived  | 5       | `severity:<agg_id>`    |
//! | `PriorityAssignment` | derived  | 5       | `priority:<agg_id>`    |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dedup::{ExactGroup, SemanticIndex};
use crate::error::DocumentIssue;
use crate::kb::{Belief, BeliefId, BeliefStore};
use crate::lifecycle::StatusChange;
use crate::model::{
    AggId, EnrichmentNote, Location, RawFinding, RawId, ReportId, Score, SecurityReport, Status, Timestamp, ToolCategory,
    ToolDescriptor,
};
use crate::scoring::{MemberEvidence, PriorityAssignment, SeverityAssessment};

pub mod class {
    pub const SECURITY_REPORT: &str = "SecurityReport";
    pub const USER_INPUT: &str = "UserInput";
    pub const ENRICHMENT_CONFIG: &str = "EnrichmentConfig";
    pub const PARSED_REPORT: &str = "ParsedReport";
    pub const AGGREGATE: &str = "AggregatedFinding";
    pub const SEMANTIC_INDEX: &str = "SemanticIndex";
    pub const ENRICHMENT_NOTES: &str = "EnrichmentNotes";
    pub const RAW_FINDING: &str = "RawFinding";
    pub const STATUS_CHANGE: &str = "StatusChange";
    pub const SEVERITY: &str = "SeverityAssessment";
    pub const PRIORITY: &str = "PriorityAssignment";

    pub const EXTERNAL: [&str; 3] = [SECURITY_REPORT, USER_INPUT, ENRICHMENT_CONFIG];
}

pub const SEMANTIC_INDEX_ID: &str = "semantic-index";

pub fn report_belief_id(id: &ReportId) -> BeliefId {
    BeliefId::new(format!("report:{id}"))
}

pub fn parsed_belief_id(id: &ReportId) -> BeliefId {
    BeliefId::new(format!("parsed:{id}"))
}

pub fn notes_belief_id(id: &AggId) -> BeliefId {
    BeliefId::new(format!("notes:{id}"))
}

pub fn severity_belief_id(id: &AggId) -> BeliefId {
    BeliefId::new(format!("severity:{id}"))
}

pub fn priority_belief_id(id: &AggId) -> BeliefId {
    BeliefId::new(format!("priority:{id}"))
}

pub fn change_belief_id(seq: u64) -> BeliefId {
    BeliefId::new(format!("change-{seq:08}"))
}

/// A report after parsing, with drafts grouped by fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedReport {
    pub report_id: ReportId,
    pub project_id: String,
    pub tool: ToolDescriptor,
    pub scan_scope: String,
    pub received_at: Timestamp,
    pub groups: Vec<ExactGroup>,
    pub rejected: Vec<DocumentIssue>,
    pub entry_count: usize,
}

/// Cluster membership plus the fields of its first member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCluster {
    pub agg_id: AggId,
    pub project_id: String,
    pub category: ToolCategory,
    pub tool: ToolDescriptor,
    pub canonical_title: String,
    pub canonical_description: String,
    pub rule_id: String,
    pub location: Location,
    pub cwe_ids: Vec<String>,
    pub cve_ids: Vec<String>,
    pub members: BTreeMap<RawId, MemberEvidence>,
    pub first_seen: Timestamp,
    /// Report time of the last membership or evidence change.
    pub changed_at: Timestamp,
}

impl AggregateCluster {
    pub fn evidence(&self) -> Vec<MemberEvidence> {
        self.members.values().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentNotes {
    pub agg_id: AggId,
    pub notes: Vec<EnrichmentNote>,
}

/// The project's enrichment rule file as last loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentConfig {
    pub source: Option<String>,
}

/// A user request. Bulk requests are expanded to explicit ids before they
/// are asserted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum UserInput {
    SetStatus {
        raw_ids: Vec<RawId>,
        status: Status,
        actor: String,
        at: Timestamp,
    },
    SetPriority {
        agg_id: AggId,
        value: Score,
        actor: String,
        at: Timestamp,
    },
}

impl UserInput {
    pub fn at(&self) -> Timestamp {
        match self {
            UserInput::SetStatus { at, .. } | UserInput::SetPriority { at, .. } => *at,
        }
    }

    pub fn actor(&self) -> &str {
        match self {
            UserInput::SetStatus { actor, .. } | UserInput::SetPriority { actor, .. } => actor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Document {
    Report(SecurityReport),
    UserInput(UserInput),
    EnrichmentConfig(EnrichmentConfig),
    Parsed(ParsedReport),
    Aggregate(AggregateCluster),
    Index(Box<SemanticIndex>),
    Notes(EnrichmentNotes),
    Raw(RawFinding),
    StatusChange(StatusChange),
    Severity(SeverityAssessment),
    Priority(PriorityAssignment),
}

macro_rules! accessor {
    ($fn:ident, $variant:ident, $ty:ty) => {
        pub fn $fn(&self) -> Option<&$ty> {
            match self {
                Document::$variant(x) => Some(x),
                _ => None,
            }
        }
    };
}

impl Document {
    accessor!(as_report, Report, SecurityReport);
    accessor!(as_user_input, UserInput, UserInput);
    accessor!(as_enrichment_config, EnrichmentConfig, EnrichmentConfig);
    accessor!(as_parsed, Parsed, ParsedReport);
    accessor!(as_aggregate, Aggregate, AggregateCluster);
    accessor!(as_notes, Notes, EnrichmentNotes);
    accessor!(as_raw, Raw, RawFinding);
    accessor!(as_status_change, StatusChange, StatusChange);
    accessor!(as_severity, Severity, SeverityAssessment);
    accessor!(as_priority, Priority, PriorityAssignment);

    pub fn as_index(&self) -> Option<&SemanticIndex> {
        match self {
            Document::Index(x) => Some(x),
            _ => None,
        }
    }
}

pub type Store = BeliefStore<Document>;

/// Typed reads over a store of [`Document`]s.
pub trait StoreExt {
    fn reports(&self) -> Vec<&SecurityReport>;
    fn parsed(&self, id: &ReportId) -> Option<&ParsedReport>;
    fn aggregates(&self) -> Vec<&AggregateCluster>;
    fn aggregate(&self, id: &AggId) -> Option<&AggregateCluster>;
    fn raw_findings(&self) -> Vec<&RawFinding>;
    fn raw_finding(&self, id: &RawId) -> Option<&RawFinding>;
    fn notes(&self, id: &AggId) -> Option<&EnrichmentNotes>;
    fn severity(&self, id: &AggId) -> Option<&SeverityAssessment>;
    fn priority(&self, id: &AggId) -> Option<&PriorityAssignment>;
    fn status_changes(&self) -> Vec<&StatusChange>;
    fn user_inputs(&self) -> Vec<(&Belief<Document>, &UserInput)>;
    fn semantic_index(&self) -> Option<&SemanticIndex>;
    /// Latest enrichment config belief, by log position.
    fn enrichment_config(&self) -> Option<(&Belief<Document>, &EnrichmentConfig)>;
    /// Raw id to aggregate id.
    fn membership(&self) -> BTreeMap<&RawId, &AggId>;
}

impl StoreExt for Store {
    fn reports(&self) -> Vec<&SecurityReport> {
        let mut out: Vec<(&Belief<Document>, &SecurityReport)> = self
            .class(class::SECURITY_REPORT)
            .filter_map(|b| b.payload.as_report().map(|r| (b, r)))
            .collect();
        out.sort_by_key(|(b, _)| b.seq);
        out.into_iter().map(|(_, r)| r).collect()
    }

    fn parsed(&self, id: &ReportId) -> Option<&ParsedReport> {
        self.get(&parsed_belief_id(id)).and_then(|b| b.payload.as_parsed())
    }

    fn aggregates(&self) -> Vec<&AggregateCluster> {
        self.class(class::AGGREGATE).filter_map(|b| b.payload.as_aggregate()).collect()
    }

    fn aggregate(&self, id: &AggId) -> Option<&AggregateCluster> {
        self.get_str(id.as_str()).and_then(|b| b.payload.as_aggregate())
    }

    fn raw_findings(&self) -> Vec<&RawFinding> {
        self.class(class::RAW_FINDING).filter_map(|b| b.payload.as_raw()).collect()
    }

    fn raw_finding(&self, id: &RawId) -> Option<&RawFinding> {
        self.get_str(id.as_str()).and_then(|b| b.payload.as_raw())
    }

    fn notes(&self, id: &AggId) -> Option<&EnrichmentNotes> {
        self.get(&notes_belief_id(id)).and_then(|b| b.payload.as_notes())
    }

    fn severity(&self, id: &AggId) -> Option<&SeverityAssessment> {
        self.get(&severity_belief_id(id)).and_then(|b| b.payload.as_severity())
    }

    fn priority(&self, id: &AggId) -> Option<&PriorityAssignment> {
        self.get(&priority_belief_id(id)).and_then(|b| b.payload.as_priority())
    }

    fn status_changes(&self) -> Vec<&StatusChange> {
        // Ids are zero-padded sequence numbers, so id order is seq order.
        self.class(class::STATUS_CHANGE)
            .filter_map(|b| b.payload.as_status_change())
            .collect()
    }

    fn user_inputs(&self) -> Vec<(&Belief<Document>, &UserInput)> {
        let mut out: Vec<_> = self
            .class(class::USER_INPUT)
            .filter(|b| !self.is_quarantined(&b.id))
            .filter_map(|b| b.payload.as_user_input().map(|u| (b, u)))
            .collect();
        out.sort_by_key(|(b, _)| b.seq);
        out
    }

    fn semantic_index(&self) -> Option<&SemanticIndex> {
        self.get_str(SEMANTIC_INDEX_ID).and_then(|b| b.payload.as_index())
    }

    fn enrichment_config(&self) -> Option<(&Belief<Document>, &EnrichmentConfig)> {
        self.class(class::ENRICHMENT_CONFIG)
            .filter_map(|b| b.payload.as_enrichment_config().map(|c| (b, c)))
            .max_by_key(|(b, _)| b.seq)
    }

    fn membership(&self) -> BTreeMap<&RawId, &AggId> {
        self.aggregates()
            .into_iter()
            .flat_map(|c| c.members.keys().map(move |r| (r, &c.agg_id)))
            .collect()
    }
}
