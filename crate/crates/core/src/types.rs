//! Domain model shared by every module. Values only; no I/O.
//!
//! Fields are public so the types serialize to the canonical snake_case JSON
//! shape directly. Constructors and `validate` enforce the invariants; any
//! value read from outside (datasets, model output, transcripts) is validated
//! before use.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sandbox::{ExecutionReport, ExecutionStatus};

/// Invariant violation in a domain value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid {type_name}: {reason}")]
pub struct TypeError {
    pub type_name: &'static str,
    pub reason: String,
}

impl TypeError {
    pub(crate) fn new(type_name: &'static str, reason: impl Into<String>) -> Self {
        Self {
            type_name,
            reason: reason.into(),
        }
    }
}

fn ensure(cond: bool, type_name: &'static str, reason: &str) -> Result<(), TypeError> {
    if cond {
        Ok(())
    } else {
        Err(TypeError::new(type_name, reason))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugCategory {
    Syntax,
    Reference,
    Logic,
    Multiple,
}

impl BugCategory {
    pub const ALL: [BugCategory; 4] = [
        BugCategory::Syntax,
        BugCategory::Reference,
        BugCategory::Logic,
        BugCategory::Multiple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BugCategory::Syntax => "syntax",
            BugCategory::Reference => "reference",
            BugCategory::Logic => "logic",
            BugCategory::Multiple => "multiple",
        }
    }

    /// Maps an upstream bug-type label onto the four categories.
    ///
    /// Accepts the canonical names as well as the major-type labels used by
    /// the benchmark release ("syntax error", "logic error", "multiple
    /// errors", ...). Anything else is an error, never a default.
    pub fn from_label(label: &str) -> Result<Self, TypeError> {
        let norm = crate::text::normalize_identifier(label);
        match norm.as_str() {
            "syntax" | "syntax_error" | "syntax_errors" => Ok(BugCategory::Syntax),
            "reference" | "reference_error" | "reference_errors" => Ok(BugCategory::Reference),
            "logic" | "logical" | "logic_error" | "logic_errors" | "logical_error"
            | "logical_errors" => Ok(BugCategory::Logic),
            "multiple" | "multiple_error" | "multiple_errors" => Ok(BugCategory::Multiple),
            _ => Err(TypeError::new(
                "BugCategory",
                format!("unknown bug category label {label:?}"),
            )),
        }
    }
}

impl fmt::Display for BugCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BugCategory {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_label(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityLevel {
    #[serde(alias = "easy")]
    Low,
    Medium,
    #[serde(alias = "hard")]
    High,
    Unknown,
}

impl ComplexityLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            ComplexityLevel::Low => "low",
            ComplexityLevel::Medium => "medium",
            ComplexityLevel::High => "high",
            ComplexityLevel::Unknown => "unknown",
        }
    }

    /// Dataset difficulty label: easy/low, medium, hard/high.
    /// `unknown` is rejected here; it is reserved for ad-hoc inputs.
    pub fn from_dataset_label(label: &str) -> Result<Self, TypeError> {
        match crate::text::normalize_identifier(label).as_str() {
            "easy" | "low" => Ok(ComplexityLevel::Low),
            "medium" => Ok(ComplexityLevel::Medium),
            "hard" | "high" => Ok(ComplexityLevel::High),
            _ => Err(TypeError::new(
                "ComplexityLevel",
                format!("unknown difficulty label {label:?}"),
            )),
        }
    }
}

impl fmt::Display for ComplexityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComplexityLevel {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if crate::text::normalize_identifier(s) == "unknown" {
            return Ok(ComplexityLevel::Unknown);
        }
        Self::from_dataset_label(s)
    }
}

/// How a test's actual output is compared with the expected output.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// Line-by-line equality after trimming trailing whitespace.
    #[default]
    ExactTrimmed,
    /// Whitespace-separated tokens; numeric tokens equal within `tolerance`.
    Numeric { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub expected_output: String,
    #[serde(default)]
    pub comparison: Comparison,
}

impl TestCase {
    pub fn exact(input: impl Into<String>, expected_output: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            expected_output: expected_output.into(),
            comparison: Comparison::ExactTrimmed,
        }
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        if let Comparison::Numeric { tolerance } = self.comparison {
            ensure(
                tolerance > 0.0 && tolerance.is_finite(),
                "TestCase",
                "numeric tolerance must be positive",
            )?;
        }
        Ok(())
    }

    /// Does `actual` match this test's expected output?
    pub fn matches(&self, actual: &str) -> bool {
        match self.comparison {
            Comparison::ExactTrimmed => {
                crate::text::trimmed_lines(actual) == crate::text::trimmed_lines(&self.expected_output)
            }
            Comparison::Numeric { tolerance } => {
                let got: Vec<&str> = actual.split_whitespace().collect();
                let want: Vec<&str> = self.expected_output.split_whitespace().collect();
                got.len() == want.len()
                    && got.iter().zip(&want).all(|(g, w)| {
                        match (g.parse::<f64>(), w.parse::<f64>()) {
                            (Ok(g), Ok(w)) => (g - w).abs() <= tolerance,
                            _ => g == w,
                        }
                    })
            }
        }
    }
}

/// One buggy program: the unit of evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugInstance {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub buggy_code: String,
    #[serde(default = "default_language")]
    pub language: String,
    pub category: BugCategory,
    pub complexity: ComplexityLevel,
    #[serde(default)]
    pub tests: Vec<TestCase>,
    /// Held out from every prompt; kept for offline analysis only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solution: Option<String>,
}

fn default_language() -> String {
    "python".to_owned()
}

impl BugInstance {
    pub fn validate(&self) -> Result<(), TypeError> {
        ensure(!self.id.trim().is_empty(), "BugInstance", "id must be nonempty")?;
        ensure(
            !self.buggy_code.trim().is_empty(),
            "BugInstance",
            "buggy_code must be nonempty",
        )?;
        ensure(
            !self.language.trim().is_empty(),
            "BugInstance",
            "language must be nonempty",
        )?;
        for test in &self.tests {
            test.validate()?;
        }
        Ok(())
    }

    /// Same instance with the reference solution removed.
    pub fn redacted(&self) -> BugInstance {
        BugInstance {
            reference_solution: None,
            ..self.clone()
        }
    }
}

/// Everything about an instance that prompts may show: the reference
/// solution is not part of it.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceView {
    pub id: String,
    pub title: String,
    pub description: String,
    pub language: String,
    pub buggy_code: String,
    pub tests: Vec<TestCase>,
}

impl InstanceView {
    /// Fails if any prompt-visible field embeds the reference solution.
    /// Code that already equals the reference (nothing to fix) is exempt.
    pub fn new(instance: &BugInstance) -> Result<Self, TypeError> {
        if let Some(secret) = instance
            .reference_solution
            .as_deref()
            .map(str::trim)
            .filter(|s| !s.is_empty())
        {
            let leaks = |field: &str| field.contains(secret);
            let code_leaks = instance.buggy_code.trim() != secret && leaks(&instance.buggy_code);
            let test_leaks = instance
                .tests
                .iter()
                .any(|t| leaks(&t.input) || leaks(&t.expected_output));
            if leaks(&instance.title) || leaks(&instance.description) || code_leaks || test_leaks {
                return Err(TypeError::new(
                    "InstanceView",
                    format!("reference solution of {} would leak into prompts", instance.id),
                ));
            }
        }
        Ok(Self {
            id: instance.id.clone(),
            title: instance.title.clone(),
            description: instance.description.clone(),
            language: instance.language.clone(),
            buggy_code: instance.buggy_code.clone(),
            tests: instance.tests.clone(),
        })
    }

    /// Tests rendered as input/expected-output pairs for prompts.
    pub fn examples_text(&self) -> String {
        if self.tests.is_empty() {
            return "(none)".to_owned();
        }
        let mut out = String::new();
        for (i, t) in self.tests.iter().enumerate() {
            out.push_str(&format!(
                "#{i} input:\n{}\n#{i} expected output:\n{}\n",
                t.input, t.expected_output
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeAnalysis {
    pub detected_categories: Vec<BugCategory>,
    pub summary: String,
    #[serde(default)]
    pub evidence: Vec<String>,
}

impl CodeAnalysis {
    /// Builds an analysis, deduplicating categories (first occurrence wins).
    pub fn new(
        detected_categories: Vec<BugCategory>,
        summary: impl Into<String>,
        evidence: Vec<String>,
    ) -> Result<Self, TypeError> {
        let mut seen = BTreeSet::new();
        let detected_categories: Vec<BugCategory> = detected_categories
            .into_iter()
            .filter(|c| seen.insert(*c))
            .collect();
        let analysis = Self {
            detected_categories,
            summary: summary.into(),
            evidence,
        };
        analysis.validate()?;
        Ok(analysis)
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        ensure(
            !self.detected_categories.is_empty(),
            "CodeAnalysis",
            "detected_categories must be nonempty",
        )?;
        let unique: BTreeSet<_> = self.detected_categories.iter().collect();
        ensure(
            unique.len() == self.detected_categories.len(),
            "CodeAnalysis",
            "detected_categories must not repeat",
        )?;
        ensure(
            !self.summary.trim().is_empty(),
            "CodeAnalysis",
            "summary must be nonempty",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub role_name: String,
    pub objective: String,
    pub task_prompt: String,
    pub priority: u32,
}

impl AgentProfile {
    pub fn new(
        role_name: impl Into<String>,
        objective: impl Into<String>,
        task_prompt: impl Into<String>,
        priority: u32,
    ) -> Result<Self, TypeError> {
        let profile = Self {
            role_name: role_name.into(),
            objective: objective.into(),
            task_prompt: task_prompt.into(),
            priority,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        ensure(
            !self.role_name.trim().is_empty(),
            "AgentProfile",
            "role_name must be nonempty",
        )?;
        ensure(
            !self.task_prompt.trim().is_empty(),
            "AgentProfile",
            "task_prompt must be nonempty",
        )?;
        ensure(self.priority >= 1, "AgentProfile", "priority must be >= 1")
    }
}

/// One iteration's strategy: agent profiles ordered by priority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebugPlan {
    pub strategy_summary: String,
    pub profiles: Vec<AgentProfile>,
    pub iteration_index: u32,
}

impl DebugPlan {
    /// Builds a plan and sorts its profiles by priority.
    pub fn new(
        strategy_summary: impl Into<String>,
        mut profiles: Vec<AgentProfile>,
        iteration_index: u32,
        max_agents: usize,
    ) -> Result<Self, TypeError> {
        profiles.sort_by_key(|p| p.priority);
        let plan = Self {
            strategy_summary: strategy_summary.into(),
            profiles,
            iteration_index,
        };
        plan.validate(max_agents)?;
        Ok(plan)
    }

    pub fn validate(&self, max_agents: usize) -> Result<(), TypeError> {
        ensure(self.iteration_index >= 1, "DebugPlan", "iteration_index must be >= 1")?;
        ensure(!self.profiles.is_empty(), "DebugPlan", "plan needs at least one profile")?;
        ensure(
            self.profiles.len() <= max_agents,
            "DebugPlan",
            "plan exceeds max_agents",
        )?;
        for profile in &self.profiles {
            profile.validate()?;
        }
        let mut priorities: Vec<u32> = self.profiles.iter().map(|p| p.priority).collect();
        priorities.sort_unstable();
        let contiguous = priorities
            .iter()
            .enumerate()
            .all(|(i, &p)| p as usize == i + 1);
        ensure(
            contiguous,
            "DebugPlan",
            "priorities must be a permutation of 1..=n",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimedStatus {
    Resolved,
    Partial,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentReport {
    pub role_name: String,
    pub findings: String,
    pub recommendations: String,
    #[serde(default)]
    pub candidate_code: Option<String>,
    pub claimed_status: ClaimedStatus,
}

impl AgentReport {
    pub fn validate(&self) -> Result<(), TypeError> {
        ensure(
            !(self.claimed_status == ClaimedStatus::Resolved && self.candidate_code.is_none()),
            "AgentReport",
            "a resolved report must carry candidate_code",
        )
    }

    /// Report for an agent whose output could not be used.
    pub fn blocked(role_name: impl Into<String>, findings: impl Into<String>) -> Self {
        Self {
            role_name: role_name.into(),
            findings: findings.into(),
            recommendations: String::new(),
            candidate_code: None,
            claimed_status: ClaimedStatus::Blocked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Fixed,
    NotFixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub rationale: String,
    #[serde(default)]
    pub final_code: Option<String>,
    #[serde(default)]
    pub evidence: Option<ExecutionReport>,
}

impl Verdict {
    /// Fixed on the strength of a sandbox run. Fails unless every test passed.
    pub fn fixed_by_tests(
        final_code: String,
        rationale: impl Into<String>,
        evidence: ExecutionReport,
    ) -> Result<Self, TypeError> {
        let verdict = Self {
            status: VerdictStatus::Fixed,
            rationale: rationale.into(),
            final_code: Some(final_code),
            evidence: Some(evidence),
        };
        verdict.validate(true)?;
        Ok(verdict)
    }

    pub fn fixed_by_judge(final_code: String, rationale: impl Into<String>) -> Self {
        Self {
            status: VerdictStatus::Fixed,
            rationale: rationale.into(),
            final_code: Some(final_code),
            evidence: None,
        }
    }

    pub fn not_fixed(
        rationale: impl Into<String>,
        final_code: Option<String>,
        evidence: Option<ExecutionReport>,
    ) -> Self {
        Self {
            status: VerdictStatus::NotFixed,
            rationale: rationale.into(),
            final_code,
            evidence,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.status == VerdictStatus::Fixed
    }

    /// `strict` is the test-gated rule: Fixed needs an all-passed execution.
    pub fn validate(&self, strict: bool) -> Result<(), TypeError> {
        if self.status != VerdictStatus::Fixed {
            return Ok(());
        }
        ensure(
            self.final_code.is_some(),
            "Verdict",
            "a fixed verdict must carry final_code",
        )?;
        if strict {
            let all_passed = self.evidence.as_ref().is_some_and(|e| {
                e.status == ExecutionStatus::AllPassed && e.per_test.iter().all(|t| t.passed)
            });
            ensure(
                all_passed,
                "Verdict",
                "strict validation requires an all-passed execution report",
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub plan: DebugPlan,
    pub reports: Vec<AgentReport>,
    pub verdict: Verdict,
    pub plan_signature: String,
    /// Set when the plan repeated an earlier signature and was accepted
    /// anyway after the forced re-ask.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub novelty_flagged: bool,
}

impl IterationRecord {
    pub fn validate(&self, max_agents: usize) -> Result<(), TypeError> {
        self.plan.validate(max_agents)?;
        ensure(
            self.reports.len() <= self.plan.profiles.len(),
            "IterationRecord",
            "more reports than profiles",
        )?;
        ensure(
            self.plan_signature == crate::orchestrator::plan_signature(&self.plan),
            "IterationRecord",
            "plan_signature does not match plan",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub instance_id: String,
    pub complexity: ComplexityLevel,
    pub fixed: bool,
    pub iterations: Vec<IterationRecord>,
    pub agents_created_total: u32,
    pub llm_calls: u64,
    pub wall_time_ms: u64,
    /// Why the session ended early (analysis failure, environment error).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl SessionOutcome {
    /// Outcome for a session that never produced an iteration.
    pub fn aborted(
        instance: &BugInstance,
        diagnostic: impl ToString,
        llm_calls: u64,
        wall_time_ms: u64,
    ) -> Self {
        Self {
            instance_id: instance.id.clone(),
            complexity: instance.complexity,
            fixed: false,
            iterations: Vec::new(),
            agents_created_total: 0,
            llm_calls,
            wall_time_ms,
            diagnostic: Some(diagnostic.to_string()),
        }
    }

    pub fn final_code(&self) -> Option<&str> {
        self.iterations
            .last()
            .and_then(|it| it.verdict.final_code.as_deref())
    }

    pub fn validate(&self, max_iterations: usize, max_agents: usize) -> Result<(), TypeError> {
        ensure(
            !self.instance_id.is_empty(),
            "SessionOutcome",
            "instance_id must be nonempty",
        )?;
        ensure(
            self.iterations.len() <= max_iterations,
            "SessionOutcome",
            "more iterations than max_iterations",
        )?;
        ensure(
            !self.iterations.is_empty() || self.diagnostic.is_some(),
            "SessionOutcome",
            "a session without iterations must carry a diagnostic",
        )?;
        for it in &self.iterations {
            it.validate(max_agents)?;
        }
        let total: usize = self.iterations.iter().map(|it| it.plan.profiles.len()).sum();
        ensure(
            total == self.agents_created_total as usize,
            "SessionOutcome",
            "agents_created_total must equal the sum of plan sizes",
        )?;
        let last_fixed = self
            .iterations
            .last()
            .is_some_and(|it| it.verdict.is_fixed());
        ensure(
            self.fixed == last_fixed,
            "SessionOutcome",
            "fixed must equal the last verdict",
        )
    }
}
