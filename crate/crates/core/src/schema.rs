//! Output schemas for structured model replies.
//!
//! Each schema is a zero-sized type implementing [`OutputSchema`]; its
//! `from_value` is the validator, and nothing that fails it is ever returned
//! to callers of [`LlmClient::complete_structured`](crate::llm::LlmClient).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Deserialize;
use serde_json::Value;

use crate::types::{BugCategory, ClaimedStatus, VerdictStatus};

pub trait OutputSchema {
    const ID: &'static str;
    /// Example shape shown to the model in repair messages.
    const SHAPE: &'static str;
    type Output;

    fn from_value(value: Value) -> Result<Self::Output, String>;
}

/// Every registered schema id.
pub const SCHEMA_IDS: [&str; 5] = [
    AnalysisV1::ID,
    ProfilesV1::ID,
    PrioritiesV1::ID,
    ReportV1::ID,
    VerdictV1::ID,
];

pub fn is_registered(id: &str) -> bool {
    SCHEMA_IDS.contains(&id)
}

/// Validate a JSON value against a schema named at runtime.
pub fn validate_by_id(id: &str, value: Value) -> Result<(), String> {
    match id {
        AnalysisV1::ID => AnalysisV1::from_value(value).map(drop),
        ProfilesV1::ID => ProfilesV1::from_value(value).map(drop),
        PrioritiesV1::ID => PrioritiesV1::from_value(value).map(drop),
        ReportV1::ID => ReportV1::from_value(value).map(drop),
        VerdictV1::ID => VerdictV1::from_value(value).map(drop),
        other => Err(format!("unknown schema {other:?}")),
    }
}

fn decode<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T, String> {
    serde_json::from_value(value).map_err(|e| format!("{e}"))
}

fn nonempty(field: &str, value: &str) -> Result<(), String> {
    if value.trim().is_empty() {
        Err(format!("field `{field}` must be a nonempty string"))
    } else {
        Ok(())
    }
}

/// Analysis as the model states it; categories may be empty (no anomaly
/// found) and are resolved by the orchestrator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisDraft {
    pub detected_categories: Vec<BugCategory>,
    pub summary: String,
    pub evidence: Vec<String>,
}

pub struct AnalysisV1;

impl OutputSchema for AnalysisV1 {
    const ID: &'static str = "analysis_v1";
    const SHAPE: &'static str = r#"{"detected_categories": ["syntax" | "reference" | "logic" | "multiple", ...], "summary": "<what is wrong>", "evidence": ["<line-referenced observation>", ...]}"#;
    type Output = AnalysisDraft;

    fn from_value(value: Value) -> Result<AnalysisDraft, String> {
        #[derive(Deserialize)]
        struct Raw {
            detected_categories: Vec<String>,
            summary: String,
            #[serde(default)]
            evidence: Vec<String>,
        }
        let raw: Raw = decode(value)?;
        nonempty("summary", &raw.summary)?;
        let detected_categories = raw
            .detected_categories
            .iter()
            .map(|label| BugCategory::from_label(label).map_err(|e| format!("{e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AnalysisDraft {
            detected_categories,
            summary: raw.summary,
            evidence: raw.evidence,
        })
    }
}

/// A profile before prioritization.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ProfileDraft {
    pub role_name: String,
    #[serde(default)]
    pub objective: String,
    pub task_prompt: String,
}

pub struct ProfilesV1;

impl OutputSchema for ProfilesV1 {
    const ID: &'static str = "profiles_v1";
    const SHAPE: &'static str = r#"{"strategy_summary": "<one line>", "profiles": [{"role_name": "<role>", "objective": "<goal>", "task_prompt": "<instructions for the agent>"}, ...]}"#;
    type Output = ProfilesDraft;

    fn from_value(value: Value) -> Result<ProfilesDraft, String> {
        let draft: ProfilesDraft = decode(value)?;
        if draft.profiles.is_empty() {
            return Err("`profiles` must contain at least one profile".into());
        }
        for (i, p) in draft.profiles.iter().enumerate() {
            nonempty(&format!("profiles[{i}].role_name"), &p.role_name)?;
            nonempty(&format!("profiles[{i}].task_prompt"), &p.task_prompt)?;
        }
        Ok(draft)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ProfilesDraft {
    #[serde(default)]
    pub strategy_summary: Option<String>,
    pub profiles: Vec<ProfileDraft>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PriorityAssignment {
    pub priorities: BTreeMap<String, u32>,
    #[serde(default)]
    pub strategy_summary: Option<String>,
}

pub struct PrioritiesV1;

impl OutputSchema for PrioritiesV1 {
    const ID: &'static str = "priorities_v1";
    const SHAPE: &'static str = r#"{"priorities": {"<role_name>": 1, "<other role_name>": 2, ...}, "strategy_summary": "<one line>"}"#;
    type Output = PriorityAssignment;

    fn from_value(value: Value) -> Result<PriorityAssignment, String> {
        let assignment: PriorityAssignment = decode(value)?;
        if assignment.priorities.is_empty() {
            return Err("`priorities` must not be empty".into());
        }
        if let Some((role, _)) = assignment.priorities.iter().find(|(_, &p)| p == 0) {
            return Err(format!("priority of {role:?} must be >= 1"));
        }
        Ok(assignment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDraft {
    pub findings: String,
    pub recommendations: String,
    pub candidate_code: Option<String>,
    pub claimed_status: ClaimedStatus,
}

pub struct ReportV1;

impl OutputSchema for ReportV1 {
    const ID: &'static str = "report_v1";
    const SHAPE: &'static str = r#"{"findings": "<what you found>", "recommendations": "<what should happen next>", "candidate_code": "<full corrected program or null>", "claimed_status": "resolved" | "partial" | "blocked"}"#;
    type Output = ReportDraft;

    fn from_value(value: Value) -> Result<ReportDraft, String> {
        #[derive(Deserialize)]
        struct Raw {
            findings: String,
            #[serde(default)]
            recommendations: String,
            #[serde(default)]
            candidate_code: Option<String>,
            claimed_status: ClaimedStatus,
        }
        let raw: Raw = decode(value)?;
        nonempty("findings", &raw.findings)?;
        Ok(ReportDraft {
            findings: raw.findings,
            recommendations: raw.recommendations,
            candidate_code: raw.candidate_code.filter(|c| !c.trim().is_empty()),
            claimed_status: raw.claimed_status,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeVerdict {
    pub status: VerdictStatus,
    pub rationale: String,
    pub final_code: Option<String>,
}

pub struct VerdictV1;

impl OutputSchema for VerdictV1 {
    const ID: &'static str = "verdict_v1";
    const SHAPE: &'static str =
        r#"{"status": "fixed" | "not_fixed", "rationale": "<why>", "final_code": "<program or null>"}"#;
    type Output = JudgeVerdict;

    fn from_value(value: Value) -> Result<JudgeVerdict, String> {
        #[derive(Deserialize)]
        struct Raw {
            status: VerdictStatus,
            rationale: String,
            #[serde(default)]
            final_code: Option<String>,
        }
        let raw: Raw = decode(value)?;
        nonempty("rationale", &raw.rationale)?;
        Ok(JudgeVerdict {
            status: raw.status,
            rationale: raw.rationale,
            final_code: raw.final_code,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn analysis_accepts_labels_and_empty_categories() {
        let a = AnalysisV1::from_value(json!({
            "detected_categories": ["Syntax Error", "logic"],
            "summary": "two problems"
        }))
        .unwrap();
        assert_eq!(a.detected_categories, [BugCategory::Syntax, BugCategory::Logic]);
        let empty = AnalysisV1::from_value(json!({
            "detected_categories": [],
            "summary": "no anomaly, logic check advised"
        }))
        .unwrap();
        assert!(empty.detected_categories.is_empty());
        assert!(AnalysisV1::from_value(json!({"detected_categories": ["oob"], "summary": "x"})).is_err());
        assert!(AnalysisV1::from_value(json!({})).is_err());
    }

    #[test]
    fn profiles_need_role_and_prompt() {
        assert!(ProfilesV1::from_value(json!({"profiles": []})).is_err());
        assert!(ProfilesV1::from_value(json!({"profiles": [{"role_name": "", "task_prompt": "x"}]})).is_err());
        let ok = ProfilesV1::from_value(json!({
            "profiles": [{"role_name": "syntax checker", "task_prompt": "fix syntax"}]
        }))
        .unwrap();
        assert_eq!(ok.profiles[0].objective, "");
    }

    #[test]
    fn priorities_must_be_positive() {
        assert!(PrioritiesV1::from_value(json!({"priorities": {"a": 0}})).is_err());
        assert!(PrioritiesV1::from_value(json!({"priorities": {}})).is_err());
        assert!(PrioritiesV1::from_value(json!({"priorities": {"a": 1, "b": 1}})).is_ok());
    }

    #[test]
    fn report_blank_candidate_is_absent() {
        let r = ReportV1::from_value(json!({
            "findings": "f", "candidate_code": "  ", "claimed_status": "resolved"
        }))
        .unwrap();
        assert_eq!(r.candidate_code, None);
        assert!(ReportV1::from_value(json!({"findings": "f", "claimed_status": "done"})).is_err());
    }

    #[test]
    fn registry_lookup() {
        for id in SCHEMA_IDS {
            assert!(is_registered(id));
        }
        assert!(validate_by_id("verdict_v1", json!({"status": "fixed", "rationale": "ok"})).is_ok());
        assert!(validate_by_id("nope", json!({})).is_err());
    }
}
