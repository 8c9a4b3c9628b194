//! Specialized-agent runtime.
//!
//! An agent is nothing more than a profile rendered into a prompt; it runs
//! once, sees the reports of the agents that ran before it in the same
//! iteration, and returns a structured report.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::llm::{ChatMessage, LlmClient, LlmError, StructuredError};
use crate::prompts::{self, Catalog, PromptError};
use crate::schema::ReportV1;
use crate::transcript::Event;
use crate::types::{
    AgentProfile, AgentReport, ClaimedStatus, CodeAnalysis, DebugPlan, InstanceView,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// What a specialized agent gets to see.
#[derive(Debug, Clone, Copy)]
pub struct AgentContext<'a> {
    pub instance: &'a InstanceView,
    pub analysis: &'a CodeAnalysis,
    pub predecessor_reports: &'a [AgentReport],
    pub current_best_code: &'a str,
}

pub(crate) fn analysis_text(analysis: &CodeAnalysis) -> String {
    let categories: Vec<&str> = analysis
        .detected_categories
        .iter()
        .map(|c| c.as_str())
        .collect();
    let mut out = format!(
        "Detected issue types: {}\nSummary: {}",
        categories.join(", "),
        analysis.summary
    );
    if !analysis.evidence.is_empty() {
        out.push_str("\nEvidence:");
        for item in &analysis.evidence {
            out.push_str("\n- ");
            out.push_str(item);
        }
    }
    out
}

pub(crate) fn reports_text(reports: &[AgentReport]) -> String {
    if reports.is_empty() {
        return "(none)".to_string();
    }
    let mut out = String::new();
    for (i, r) in reports.iter().enumerate() {
        let status = match r.claimed_status {
            ClaimedStatus::Resolved => "resolved",
            ClaimedStatus::Partial => "partial",
            ClaimedStatus::Blocked => "blocked",
        };
        out.push_str(&format!(
            "{}. {} ({status})\n   Findings: {}\n   Recommendations: {}\n",
            i + 1,
            r.role_name,
            r.findings.trim(),
            r.recommendations.trim()
        ));
    }
    out
}

fn system_prompt(profile: &AgentProfile) -> String {
    format!(
        "You are {}, a specialized member of a debugging team. You work on one task and report back to the team leader.",
        profile.role_name
    )
}

/// Run one specialized agent.
///
/// Unusable model output becomes a `Blocked` report; only transport-level
/// failures and catalog defects are errors.
pub fn execute_task(
    client: &mut LlmClient<'_>,
    catalog: &Catalog,
    profile: &AgentProfile,
    ctx: &AgentContext<'_>,
) -> Result<AgentReport, AgentError> {
    let analysis = analysis_text(ctx.analysis);
    let predecessors = reports_text(ctx.predecessor_reports);
    let examples = ctx.instance.examples_text();
    let prompt = catalog.render(
        prompts::SPECIALIZED_TASK,
        &[
            ("role_name", &profile.role_name),
            ("objective", &profile.objective),
            ("task_prompt", &profile.task_prompt),
            ("description", &ctx.instance.description),
            ("language", &ctx.instance.language),
            ("current_code", ctx.current_best_code),
            ("examples", &examples),
            ("analysis", &analysis),
            ("predecessor_reports", &predecessors),
        ],
    )?;
    let messages = [ChatMessage::system(system_prompt(profile)), ChatMessage::user(prompt)];

    match client.complete_structured::<ReportV1>(&messages) {
        Ok(draft) => {
            let mut report = AgentReport {
                role_name: profile.role_name.clone(),
                findings: draft.findings,
                recommendations: draft.recommendations,
                candidate_code: draft.candidate_code,
                claimed_status: draft.claimed_status,
            };
            if report.claimed_status == ClaimedStatus::Resolved && report.candidate_code.is_none() {
                report.claimed_status = ClaimedStatus::Partial;
            }
            Ok(report)
        }
        Err(StructuredError::Invalid { raw, reason, .. }) => Ok(AgentReport::blocked(
            profile.role_name.clone(),
            format!("unusable agent output ({reason}): {raw}"),
        )),
        Err(StructuredError::Llm(e)) => Err(AgentError::Llm(e)),
    }
}

/// Reports produced by one iteration's agents.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRun {
    pub reports: Vec<AgentReport>,
    /// Set when an agent failed and the remaining agents were skipped.
    pub failure: Option<(String, AgentError)>,
}

/// Dispatch the plan's agents strictly in priority order.
///
/// Agent k sees the reports of agents 1..k-1 and the latest candidate code:
/// every `Resolved` or `Partial` report carrying code replaces the current
/// best code for the agents after it.
pub fn run_plan(
    client: &mut LlmClient<'_>,
    catalog: &Catalog,
    plan: &DebugPlan,
    instance: &InstanceView,
    analysis: &CodeAnalysis,
) -> PlanRun {
    let mut reports: Vec<AgentReport> = Vec::with_capacity(plan.profiles.len());
    let mut current_best = instance.buggy_code.clone();
    for profile in &plan.profiles {
        let ctx = AgentContext {
            instance,
            analysis,
            predecessor_reports: &reports,
            current_best_code: &current_best,
        };
        match execute_task(client, catalog, profile, &ctx) {
            Ok(report) => {
                if matches!(
                    report.claimed_status,
                    ClaimedStatus::Resolved | ClaimedStatus::Partial
                ) {
                    if let Some(code) = &report.candidate_code {
                        current_best = code.clone();
                    }
                }
                client.emit(Event::AgentReport {
                    iteration: plan.iteration_index,
                    report: report.clone(),
                });
                reports.push(report);
            }
            Err(e) => {
                return PlanRun {
                    reports,
                    failure: Some((profile.role_name.clone(), e)),
                }
            }
        }
    }
    PlanRun {
        reports,
        failure: None,
    }
}
