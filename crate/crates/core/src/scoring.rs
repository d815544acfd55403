//! Common severity per aggregated finding, and user-refined priority.
//!
//! Severity is the highest member score plus a per-category adjustment:
//!
//! | category        | adjustment                              |
//! |-----------------|-----------------------------------------|
//! | secret-scan     | +2.0                                    |
//! | dependency-scan | +0.0 with a fixed version, +0.5 without |
//! | others          | +0.0                                    |
//!
//! capped at 10.0.

use serde::{Deserialize, Serialize};

use crate::error::ScoringError;
use crate::model::{AggId, Score, SeverityLevel, Timestamp, ToolCategory};

pub const MODEL_VERSION: &str = "activity-approx-1";

/// What scoring needs to know about one member finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberEvidence {
    pub score: Score,
    pub unscored: bool,
    pub has_fix: bool,
}

/// Adjustment in tenths.
pub fn category_adjustment(category: ToolCategory, has_fix: bool) -> u16 {
    match category {
        ToolCategory::SecretScan => 20,
        ToolCategory::DependencyScan if has_fix => 0,
        ToolCategory::DependencyScan => 5,
        ToolCategory::StaticAnalysis | ToolCategory::DynamicTest | ToolCategory::Other => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityAssessment {
    pub agg_id: AggId,
    pub level: SeverityLevel,
    /// Member scores the level was computed from.
    pub inputs: Vec<Score>,
    pub model_version: String,
    pub suggested_priority: Score,
    /// `(time, level)` each time the level changed, oldest first.
    #[serde(default)]
    pub history: Vec<(Timestamp, SeverityLevel)>,
}

impl SeverityAssessment {
    /// The level in force just before `cutoff`.
    pub fn level_as_of(&self, cutoff: Timestamp) -> Option<SeverityLevel> {
        self.history.iter().rev().find(|(t, _)| *t < cutoff).map(|(_, l)| *l)
    }
}

/// Max over members, then the category adjustment. `None` for an empty
/// member list.
pub fn compute_severity(agg_id: &AggId, category: ToolCategory, members: &[MemberEvidence]) -> Option<SeverityAssessment> {
    let top = members.iter().map(|m| m.score).max()?;
    // A dependency fix anywhere in the cluster counts.
    let has_fix = members.iter().any(|m| m.has_fix);
    let score = top.saturating_add_tenths(category_adjustment(category, has_fix));
    let level = SeverityLevel {
        unscored: members.iter().all(|m| m.unscored),
        ..SeverityLevel::from_score(score)
    };
    let mut inputs: Vec<Score> = members.iter().map(|m| m.score).collect();
    inputs.sort_unstable_by(|a, b| b.cmp(a));
    Some(SeverityAssessment {
        agg_id: agg_id.clone(),
        level,
        inputs,
        model_version: MODEL_VERSION.to_string(),
        suggested_priority: suggest_priority(&level),
        history: Vec::new(),
    })
}

/// The suggestion is the severity score itself.
pub fn suggest_priority(level: &SeverityLevel) -> Score {
    level.score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityEvent {
    pub value: Score,
    pub actor: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityAssignment {
    pub agg_id: AggId,
    pub value: Score,
    pub actor: String,
    pub assigned_at: Timestamp,
    #[serde(default)]
    pub history: Vec<PriorityEvent>,
}

impl PriorityAssignment {
    pub fn assigned_before(&self, cutoff: Timestamp) -> bool {
        self.history.first().is_some_and(|e| e.at < cutoff)
    }
}

/// Validates a user assignment and folds it into the previous one.
pub fn refine_priority(
    agg_id: &AggId,
    value: f64,
    actor: &str,
    at: Timestamp,
    previous: Option<&PriorityAssignment>,
) -> Result<PriorityAssignment, ScoringError> {
    if actor.trim().is_empty() || actor == crate::lifecycle::SYSTEM_ACTOR {
        return Err(ScoringError::NotAUser);
    }
    let score = Score::new(value).map_err(|_| ScoringError::PriorityOutOfRange(value))?;
    let mut history = previous.map(|p| p.history.clone()).unwrap_or_default();
    history.push(PriorityEvent {
        value: score,
        actor: actor.to_string(),
        at,
    });
    Ok(PriorityAssignment {
        agg_id: agg_id.clone(),
        value: score,
        actor: actor.to_string(),
        assigned_at: at,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SeverityBand;
    use chrono::Utc;

    fn ev(score: f64) -> MemberEvidence {
        MemberEvidence {
            score: Score::new(score).unwrap(),
            unscored: false,
            has_fix: false,
        }
    }

    fn id() -> AggId {
        AggId::new("agg-000001")
    }

    #[test]
    fn max_rule() {
        let a = compute_severity(&id(), ToolCategory::StaticAnalysis, &[ev(7.5), ev(5.0)]).unwrap();
        assert_eq!(a.level.score, Score::new(7.5).unwrap());
        assert_eq!(a.level.band, SeverityBand::High);
        assert_eq!(a.inputs.len(), 2);
        assert_eq!(a.model_version, MODEL_VERSION);
    }

    #[test]
    fn dependency_with_fix_is_unadjusted() {
        let m = MemberEvidence { has_fix: true, ..ev(9.8) };
        let a = compute_severity(&id(), ToolCategory::DependencyScan, &[m]).unwrap();
        assert_eq!(a.level.band, SeverityBand::Critical);
        assert_eq!(a.level.score, Score::new(9.8).unwrap());
        let no_fix = compute_severity(&id(), ToolCategory::DependencyScan, &[ev(6.0)]).unwrap();
        assert_eq!(no_fix.level.score, Score::new(6.5).unwrap());
    }

    #[test]
    fn unscored_secret_becomes_high() {
        let m = MemberEvidence {
            unscored: true,
            ..ev(5.0)
        };
        let a = compute_severity(&id(), ToolCategory::SecretScan, &[m]).unwrap();
        assert_eq!(a.level.score, Score::new(7.0).unwrap());
        assert_eq!(a.level.band, SeverityBand::High);
        assert!(a.level.unscored);
    }

    #[test]
    fn capped_at_ten() {
        let a = compute_severity(&id(), ToolCategory::SecretScan, &[ev(9.5)]).unwrap();
        assert_eq!(a.level.score, Score::MAX);
    }

    #[test]
    fn empty_cluster_has_no_assessment() {
        assert!(compute_severity(&id(), ToolCategory::Other, &[]).is_none());
    }

    #[test]
    fn suggestion_and_refinement() {
        let a = compute_severity(&id(), ToolCategory::StaticAnalysis, &[ev(9.5)]).unwrap();
        assert_eq!(a.suggested_priority, Score::new(9.5).unwrap());
        let p = refine_priority(&id(), 8.5, "alice", Utc::now(), None).unwrap();
        assert_eq!(p.value, Score::new(8.5).unwrap());
        let p2 = refine_priority(&id(), 3.0, "bob", Utc::now(), Some(&p)).unwrap();
        assert_eq!(p2.history.len(), 2);
        assert_eq!(refine_priority(&id(), 11.0, "a", Utc::now(), None), Err(ScoringError::PriorityOutOfRange(11.0)));
        assert_eq!(refine_priority(&id(), 1.0, "system", Utc::now(), None), Err(ScoringError::NotAUser));
    }
}
