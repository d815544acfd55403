use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("tool name must not be empty")]
    EmptyToolName,
    #[error("unknown tool category `{0}`")]
    UnknownCategory(String),
    #[error("unknown format tag `{0}`")]
    UnknownFormat(String),
    #[error("unknown status `{0}`")]
    UnknownStatus(String),
    #[error("unknown severity `{0}`")]
    UnknownSeverity(String),
    #[error("cvss {0} outside [0, 10]")]
    CvssOutOfRange(f64),
    #[error("score {0} outside [0, 10]")]
    ScoreOutOfRange(f64),
    #[error("missing mandatory field(s): {}", .0.join(", "))]
    MissingFields(Vec<String>),
    #[error("line numbers start at 1")]
    InvalidLine,
}

/// A problem found while reading a report document. `location` is a JSON
/// pointer into the document (empty for the document itself).
#[derive(Debug, Clone, PartialEq, Eq, Error, serde::Serialize, serde::Deserialize)]
#[error("{location}: {message}")]
pub struct DocumentIssue {
    pub location: String,
    pub message: String,
}

impl DocumentIssue {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("invalid document: {}", join_issues(.0))]
    Invalid(Vec<DocumentIssue>),
    #[error("format undetectable")]
    Undetectable,
    #[error("declared format `{declared}` but document looks like `{detected}`")]
    FormatMismatch { declared: String, detected: String },
    #[error("no adapter registered for `{tag}` (known: {})", .known.join(", "))]
    UnknownAdapter { tag: String, known: Vec<String> },
    #[error("no valid entries: {}", join_issues(.0))]
    NoValidEntries(Vec<DocumentIssue>),
}

fn join_issues(issues: &[DocumentIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LifecycleError {
    #[error("status Disappeared cannot be assigned by users")]
    DisappearedNotAssignable,
    #[error("unknown finding `{0}`")]
    UnknownFinding(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("priority {0} outside [0, 10]")]
    PriorityOutOfRange(f64),
    #[error("unknown aggregated finding `{0}`")]
    UnknownAggregate(String),
    #[error("priority can only be assigned by users")]
    NotAUser,
}
