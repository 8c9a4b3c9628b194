//! The main agent.
//!
//! One session runs: analyze once, then per iteration profile agents,
//! prioritize them, dispatch them in order and validate the result. A failed
//! validation sends the main agent back to profiling with the full history and
//! an instruction to try a strategy it has not tried before.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agents::{self, analysis_text, reports_text};
use crate::llm::{ChatBackend, ChatMessage, LlmClient, ModelConfig, StructuredError};
use crate::prompts::{self, Catalog, PromptError};
use crate::sandbox::{evaluate_candidate, Executor, ExecutorError, ResourceLimits};
use crate::schema::{AnalysisV1, PrioritiesV1, ProfilesV1, VerdictV1};
use crate::text::{collapse_whitespace, normalize_identifier};
use crate::transcript::{CollisionAction, Event, EventSink, SessionKind, TRANSCRIPT_SCHEMA_VERSION};
use crate::types::{
    AgentProfile, AgentReport, BugCategory, BugInstance, ClaimedStatus, CodeAnalysis, DebugPlan,
    InstanceView, IterationRecord, SessionOutcome, TypeError, Verdict, VerdictStatus,
};

const MAIN_AGENT_SYSTEM: &str = "You are the team leader of an adaptive debugging team. You analyze buggy programs, decide which specialized agents to create and in what order they work, and judge their results. You never edit code yourself.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Fixed only if every test passes in the sandbox.
    TestGated,
    /// The main agent judges the reports.
    LlmJudged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrchestratorConfig {
    pub max_iterations: u32,
    pub max_agents: u32,
    /// `None` picks test-gated when the instance has tests, else judged.
    #[serde(default)]
    pub validation_mode: Option<ValidationMode>,
    pub model: ModelConfig,
    #[serde(default)]
    pub limits: ResourceLimits,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            max_agents: 5,
            validation_mode: None,
            model: ModelConfig::default(),
            limits: ResourceLimits::default(),
        }
    }
}

impl OrchestratorConfig {
    pub fn validate(&self) -> Result<(), TypeError> {
        if self.max_iterations == 0 {
            return Err(TypeError::new("OrchestratorConfig", "max_iterations must be >= 1"));
        }
        if self.max_agents == 0 {
            return Err(TypeError::new("OrchestratorConfig", "max_agents must be >= 1"));
        }
        self.model.validate()?;
        self.limits.validate()
    }

    /// Validation mode for `instance`.
    pub fn mode_for(&self, instance: &BugInstance) -> Result<ValidationMode, TypeError> {
        match self.validation_mode {
            Some(ValidationMode::TestGated) if instance.tests.is_empty() => Err(TypeError::new(
                "OrchestratorConfig",
                format!("test-gated validation needs tests, instance {} has none", instance.id),
            )),
            Some(mode) => Ok(mode),
            None if instance.tests.is_empty() => Ok(ValidationMode::LlmJudged),
            None => Ok(ValidationMode::TestGated),
        }
    }
}

pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// Always reads zero; makes wall-time fields deterministic.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(TypeError),
    #[error("test-gated validation requested but no executor is configured")]
    SandboxUnavailable,
    #[error("prompt firewall: {0}")]
    Firewall(TypeError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("code analysis failed: {0}")]
    AnalysisFailed(StructuredError),
    #[error("replay diverged: {0}")]
    Replay(String),
}

/// Profiles proposed for one plan, before prioritization.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiling {
    /// Provisional priorities follow the model's order.
    pub profiles: Vec<AgentProfile>,
    pub strategy_summary: Option<String>,
    /// How many profiles the model proposed, when more than the cap.
    pub truncated_from: Option<usize>,
    /// The model's output was unusable and built-in profiles were used.
    pub fallback: bool,
}

/// A prioritized plan plus how it came about.
#[derive(Debug, Clone, PartialEq)]
pub struct Prioritized {
    pub plan: DebugPlan,
    /// The model's ordering was unusable and the profiling order was kept.
    pub fallback: bool,
}

/// Stable digest of a plan: the ordered (role, objective) pairs, with role
/// names normalized for case, whitespace and punctuation and objectives for
/// whitespace.
pub fn plan_signature(plan: &DebugPlan) -> String {
    let mut canonical = String::new();
    for profile in &plan.profiles {
        canonical.push_str(&normalize_identifier(&profile.role_name));
        canonical.push('\u{1f}');
        canonical.push_str(&collapse_whitespace(&profile.objective));
        canonical.push('\u{1e}');
    }
    let full = crate::hash::sha256_hex(canonical.as_bytes());
    full[..32].to_owned()
}

/// Candidate chosen for validation: the highest-priority report claiming
/// `Resolved`, else the last report carrying any code.
pub fn select_candidate(reports: &[AgentReport]) -> Option<&str> {
    reports
        .iter()
        .find(|r| r.claimed_status == ClaimedStatus::Resolved && r.candidate_code.is_some())
        .or_else(|| reports.iter().rev().find(|r| r.candidate_code.is_some()))
        .and_then(|r| r.candidate_code.as_deref())
}

fn fallback_role(category: BugCategory) -> (&'static str, &'static str, &'static str) {
    match category {
        BugCategory::Syntax => (
            "syntax checker",
            "Make the program syntactically valid",
            "You are a syntax checker. Check the code for syntax errors such as missing colons, unbalanced brackets and bad indentation, repair them, and report what you fixed.",
        ),
        BugCategory::Reference => (
            "reference resolver",
            "Fix undefined, misspelled or misused names",
            "You are a reference resolver. Find every name that is undefined, misspelled or used outside its scope, repair it, and report what you fixed.",
        ),
        BugCategory::Logic => (
            "logic verifier",
            "Make the program produce the expected results",
            "You are a logic verifier. Trace the program against the problem statement and the example tests, repair wrong conditions, operators and algorithms, and report what you fixed.",
        ),
        BugCategory::Multiple => (
            "general debugger",
            "Fix every remaining defect",
            "You are a general debugger. Find and repair every remaining defect in the program and report what you fixed.",
        ),
    }
}

/// Built-in single-agent plans used when profiling output is unusable. Later
/// iterations rotate through the detected categories so retries differ.
fn fallback_profiles(analysis: &CodeAnalysis, iteration: u32) -> Vec<AgentProfile> {
    let mut order: Vec<BugCategory> = Vec::new();
    for category in &analysis.detected_categories {
        let expanded: &[BugCategory] = match category {
            BugCategory::Multiple => &[BugCategory::Syntax, BugCategory::Reference, BugCategory::Logic],
            other => core::slice::from_ref(other),
        };
        for c in expanded {
            if !order.contains(c) {
                order.push(*c);
            }
        }
    }
    order.push(BugCategory::Multiple);
    let pick = order[(iteration as usize - 1) % order.len()];
    let (role, objective, prompt) = fallback_role(pick);
    vec![AgentProfile {
        role_name: role.to_string(),
        objective: objective.to_string(),
        task_prompt: prompt.to_string(),
        priority: 1,
    }]
}

/// Rename profiles whose normalized role names collide ("x", "x 2", ...).
fn dedup_roles(profiles: &mut [AgentProfile]) {
    let mut seen: Vec<String> = Vec::new();
    for profile in profiles.iter_mut() {
        let mut name = profile.role_name.trim().to_string();
        let mut n = 2;
        while seen.contains(&normalize_identifier(&name)) {
            name = format!("{} {n}", profile.role_name.trim());
            n += 1;
        }
        seen.push(normalize_identifier(&name));
        profile.role_name = name;
    }
}

fn default_strategy(profiles: &[AgentProfile]) -> String {
    let roles: Vec<&str> = profiles.iter().map(|p| p.role_name.as_str()).collect();
    roles.join(" -> ")
}

fn history_strategies(history: &[IterationRecord]) -> String {
    let mut out = String::new();
    for (i, record) in history.iter().enumerate() {
        out.push_str(&format!(
            "{}. {} [signature {}; agents: {}]\n",
            i + 1,
            record.plan.strategy_summary,
            record.plan_signature,
            default_strategy(&record.plan.profiles)
        ));
    }
    out
}

fn history_outcomes(history: &[IterationRecord]) -> String {
    let mut out = String::new();
    for record in history {
        out.push_str(&format!(
            "Iteration {}: {}\n{}",
            record.plan.iteration_index,
            record.verdict.rationale,
            reports_text(&record.reports)
        ));
    }
    out
}

/// Drives sessions. Holds only shared, read-only collaborators; each
/// session brings its own backend and transcript sink.
pub struct Orchestrator<'a> {
    config: &'a OrchestratorConfig,
    catalog: &'a Catalog,
    executor: Option<&'a dyn Executor>,
    clock: &'a dyn Clock,
}

impl<'a> Orchestrator<'a> {
    pub fn new(
        config: &'a OrchestratorConfig,
        catalog: &'a Catalog,
        executor: Option<&'a dyn Executor>,
        clock: &'a dyn Clock,
    ) -> Self {
        Self {
            config,
            catalog,
            executor,
            clock,
        }
    }

    pub fn config(&self) -> &OrchestratorConfig {
        self.config
    }

    fn main_agent_messages(prompt: String) -> [ChatMessage; 2] {
        [ChatMessage::system(MAIN_AGENT_SYSTEM), ChatMessage::user(prompt)]
    }

    pub fn analyze_code(
        &self,
        client: &mut LlmClient<'_>,
        instance: &InstanceView,
    ) -> Result<CodeAnalysis, SessionError> {
        let examples = instance.examples_text();
        let prompt = self.catalog.render(
            prompts::MAIN_ANALYSIS,
            &[
                ("instance_id", &instance.id),
                ("title", &instance.title),
                ("description", &instance.description),
                ("language", &instance.language),
                ("code", &instance.buggy_code),
                ("examples", &examples),
            ],
        )?;
        let draft = client
            .complete_structured::<AnalysisV1>(&Self::main_agent_messages(prompt))
            .map_err(SessionError::AnalysisFailed)?;
        let mut categories = draft.detected_categories;
        if categories.is_empty() {
            // No anomaly spotted: a behavioral check is still worth doing.
            categories.push(BugCategory::Logic);
        }
        CodeAnalysis::new(categories, draft.summary, draft.evidence)
            .map_err(|e| SessionError::AnalysisFailed(StructuredError::Invalid {
                schema: "analysis_v1",
                reason: e.to_string(),
                raw: String::new(),
            }))
    }

    /// Ask the main agent which agents to create. Unusable output falls back
    /// to built-in profiles; more than `max_agents` profiles are truncated.
    pub fn profile_agents(
        &self,
        client: &mut LlmClient<'_>,
        analysis: &CodeAnalysis,
        instance: &InstanceView,
        history: &[IterationRecord],
        collision_note: Option<&str>,
    ) -> Result<Profiling, SessionError> {
        let analysis_str = analysis_text(analysis);
        let max_agents = self.config.max_agents.to_string();
        let prompt = if history.is_empty() {
            self.catalog.render(
                prompts::PROFILING,
                &[
                    ("description", &instance.description),
                    ("language", &instance.language),
                    ("code", &instance.buggy_code),
                    ("analysis", &analysis_str),
                    ("max_agents", &max_agents),
                ],
            )?
        } else {
            let strategies = history_strategies(history);
            let outcomes = history_outcomes(history);
            self.catalog.render(
                prompts::REPLAN,
                &[
                    ("description", &instance.description),
                    ("language", &instance.language),
                    ("code", &instance.buggy_code),
                    ("analysis", &analysis_str),
                    ("max_agents", &max_agents),
                    ("previous_strategies", &strategies),
                    ("previous_outcomes", &outcomes),
                    ("collision_note", collision_note.unwrap_or("")),
                ],
            )?
        };
        let iteration = history.len() as u32 + 1;
        match client.complete_structured::<ProfilesV1>(&Self::main_agent_messages(prompt)) {
            Ok(draft) => {
                let proposed = draft.profiles.len();
                let cap = self.config.max_agents as usize;
                let mut profiles: Vec<AgentProfile> = draft
                    .profiles
                    .into_iter()
                    .take(cap)
                    .enumerate()
                    .map(|(i, p)| AgentProfile {
                        role_name: p.role_name.trim().to_string(),
                        objective: p.objective,
                        task_prompt: p.task_prompt,
                        priority: i as u32 + 1,
                    })
                    .collect();
                dedup_roles(&mut profiles);
                Ok(Profiling {
                    profiles,
                    strategy_summary: draft.strategy_summary.filter(|s| !s.trim().is_empty()),
                    truncated_from: (proposed > cap).then_some(proposed),
                    fallback: false,
                })
            }
            Err(e) if e.is_fatal() => Err(SessionError::Replay(e.to_string())),
            Err(_) => Ok(Profiling {
                profiles: fallback_profiles(analysis, iteration),
                strategy_summary: None,
                truncated_from: None,
                fallback: true,
            }),
        }
    }

    /// Order the profiles. A single profile needs no model call; an unusable
    /// ordering keeps the profiling order.
    pub fn prioritize(
        &self,
        client: &mut LlmClient<'_>,
        profiling: Profiling,
        analysis: &CodeAnalysis,
        iteration: u32,
    ) -> Result<Prioritized, SessionError> {
        let max_agents = self.config.max_agents as usize;
        let mut profiles = profiling.profiles;
        let build = |profiles: Vec<AgentProfile>, summary: Option<String>| {
            let summary = summary.unwrap_or_else(|| default_strategy(&profiles));
            DebugPlan::new(summary, profiles, iteration, max_agents)
                .map_err(SessionError::InvalidConfig)
        };
        if profiles.len() == 1 {
            profiles[0].priority = 1;
            return Ok(Prioritized {
                plan: build(profiles, profiling.strategy_summary)?,
                fallback: false,
            });
        }

        let listing: String = profiles
            .iter()
            .map(|p| format!("- {}: {}\n", p.role_name, p.objective))
            .collect();
        let prompt = self.catalog.render(
            prompts::PRIORITIZATION,
            &[("analysis", &analysis_text(analysis)), ("profiles", &listing)],
        )?;
        let assignment =
            match client.complete_structured::<PrioritiesV1>(&Self::main_agent_messages(prompt)) {
                Ok(a) => Some(a),
                Err(e) if e.is_fatal() => return Err(SessionError::Replay(e.to_string())),
                Err(_) => None,
            };

        let ranks = assignment.as_ref().and_then(|a| {
            let mut ranks = Vec::with_capacity(profiles.len());
            for profile in &profiles {
                let key = normalize_identifier(&profile.role_name);
                let mut matches = a
                    .priorities
                    .iter()
                    .filter(|(name, _)| normalize_identifier(name) == key);
                let (_, &rank) = matches.next()?;
                if matches.next().is_some() {
                    return None;
                }
                ranks.push(rank);
            }
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            let permutation = a.priorities.len() == profiles.len()
                && sorted.iter().enumerate().all(|(i, &r)| r as usize == i + 1);
            permutation.then_some(ranks)
        });

        let fallback = ranks.is_none();
        match ranks {
            Some(ranks) => {
                for (profile, rank) in profiles.iter_mut().zip(ranks) {
                    profile.priority = rank;
                }
            }
            None => {
                for (i, profile) in profiles.iter_mut().enumerate() {
                    profile.priority = i as u32 + 1;
                }
            }
        }
        let summary = assignment
            .and_then(|a| a.strategy_summary)
            .filter(|s| !s.trim().is_empty() && !fallback)
            .or(profiling.strategy_summary);
        Ok(Prioritized {
            plan: build(profiles, summary)?,
            fallback,
        })
    }

    /// Judge the iteration's reports. Test-gated verdicts come from the
    /// sandbox alone; judged verdicts from the main agent.
    pub fn validate(
        &self,
        client: &mut LlmClient<'_>,
        instance: &BugInstance,
        reports: &[AgentReport],
        iteration: u32,
        sandbox_spent_ms: &mut u64,
    ) -> Result<Verdict, SessionError> {
        let mode = self.config.mode_for(instance).map_err(SessionError::InvalidConfig)?;
        if mode == ValidationMode::TestGated && self.executor.is_none() {
            return Err(SessionError::SandboxUnavailable);
        }
        let Some(candidate) = select_candidate(reports) else {
            return Ok(Verdict::not_fixed("no agent produced candidate code", None, None));
        };
        let candidate = candidate.to_string();

        match mode {
            ValidationMode::TestGated => {
                let executor = self.executor.ok_or(SessionError::SandboxUnavailable)?;
                let limits = &self.config.limits;
                if *sandbox_spent_ms >= limits.total_session_budget_ms {
                    return Ok(Verdict::not_fixed(
                        format!(
                            "sandbox budget of {} ms exhausted",
                            limits.total_session_budget_ms
                        ),
                        Some(candidate),
                        None,
                    ));
                }
                let result = evaluate_candidate(
                    &candidate,
                    &instance.language,
                    &instance.tests,
                    limits,
                    executor,
                );
                let report = match result {
                    Ok(report) => report,
                    Err(ExecutorError::ReplayMismatch(msg)) => return Err(SessionError::Replay(msg)),
                    Err(e) => {
                        client.emit(Event::ExecutionFailed {
                            iteration,
                            candidate_hash: crate::hash::sha256_hex(candidate.as_bytes()),
                            error: e.clone(),
                        });
                        return Ok(Verdict::not_fixed(
                            format!("sandbox could not evaluate the candidate: {e}"),
                            Some(candidate),
                            None,
                        ))
                    }
                };
                *sandbox_spent_ms += report.duration_ms;
                client.emit(Event::Execution {
                    iteration,
                    candidate_hash: crate::hash::sha256_hex(candidate.as_bytes()),
                    report: report.clone(),
                });
                let rationale = format!("sandbox: {}", report.describe());
                if report.all_passed() {
                    Verdict::fixed_by_tests(candidate, rationale, report)
                        .map_err(SessionError::InvalidConfig)
                } else {
                    Ok(Verdict::not_fixed(rationale, Some(candidate), Some(report)))
                }
            }
            ValidationMode::LlmJudged => {
                let view = InstanceView::new(instance).map_err(SessionError::Firewall)?;
                let prompt = self.catalog.render(
                    prompts::VALIDATION,
                    &[
                        ("description", &view.description),
                        ("language", &view.language),
                        ("candidate_code", &candidate),
                        ("reports", &reports_text(reports)),
                    ],
                )?;
                match client.complete_structured::<VerdictV1>(&Self::main_agent_messages(prompt)) {
                    Ok(judged) if judged.status == VerdictStatus::Fixed => {
                        Ok(Verdict::fixed_by_judge(candidate, judged.rationale))
                    }
                    Ok(judged) => Ok(Verdict::not_fixed(judged.rationale, Some(candidate), None)),
                    Err(e) if e.is_fatal() => Err(SessionError::Replay(e.to_string())),
                    Err(e) => Ok(Verdict::not_fixed(
                        format!("main agent could not judge the result: {e}"),
                        Some(candidate),
                        None,
                    )),
                }
            }
        }
    }

    fn plan_iteration(
        &self,
        client: &mut LlmClient<'_>,
        analysis: &CodeAnalysis,
        view: &InstanceView,
        history: &[IterationRecord],
        note: Option<&str>,
    ) -> Result<(Prioritized, Profiling), SessionError> {
        let iteration = history.len() as u32 + 1;
        let profiling = self.profile_agents(client, analysis, view, history, note)?;
        let meta = Profiling {
            profiles: Vec::new(),
            ..profiling.clone()
        };
        let prioritized = self.prioritize(client, profiling, analysis, iteration)?;
        Ok((prioritized, meta))
    }

    /// One full debugging session.
    ///
    /// Model and sandbox misbehavior degrade the session (fallbacks, `NotFixed`
    /// verdicts) and never abort it. An analysis failure ends it early with
    /// `fixed = false`. Errors are reserved for configuration problems and
    /// replay divergence.
    pub fn run_session(
        &self,
        instance: &BugInstance,
        backend: &mut dyn ChatBackend,
        sink: &mut dyn EventSink,
    ) -> Result<SessionOutcome, SessionError> {
        let started = self.clock.now_ms();
        self.config.validate().map_err(SessionError::InvalidConfig)?;
        instance.validate().map_err(SessionError::InvalidConfig)?;
        let mode = self.config.mode_for(instance).map_err(SessionError::InvalidConfig)?;
        if mode == ValidationMode::TestGated && self.executor.is_none() {
            return Err(SessionError::SandboxUnavailable);
        }
        let view = InstanceView::new(instance).map_err(SessionError::Firewall)?;

        sink.emit(Event::SessionStart {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            session_kind: SessionKind::Adaptive,
            instance: instance.redacted(),
            config: self.config.clone(),
            template_versions: self.catalog.versions(),
        });
        let mut client = LlmClient::new(backend, sink, &self.config.model);

        let analysis = match self.analyze_code(&mut client, &view) {
            Ok(analysis) => analysis,
            Err(SessionError::AnalysisFailed(e)) if e.is_fatal() => {
                return Err(SessionError::Replay(e.to_string()))
            }
            Err(SessionError::AnalysisFailed(e)) => {
                let diagnostic = format!("analysis failed: {e}");
                let calls = client.calls();
                let wall = self.clock.now_ms().saturating_sub(started);
                client.emit(Event::SessionEnd {
                    fixed: false,
                    iterations: 0,
                    agents_created_total: 0,
                    llm_calls: calls,
                    wall_time_ms: wall,
                    diagnostic: Some(diagnostic.clone()),
                });
                return Ok(SessionOutcome::aborted(instance, diagnostic, calls, wall));
            }
            Err(other) => return Err(other),
        };
        client.emit(Event::Analysis {
            analysis: analysis.clone(),
        });

        let mut history: Vec<IterationRecord> = Vec::new();
        let mut sandbox_spent_ms = 0u64;
        for iteration in 1..=self.config.max_iterations {
            let mut novelty_flagged = false;
            let (mut prioritized, mut meta) =
                self.plan_iteration(&mut client, &analysis, &view, &history, None)?;
            let mut signature = plan_signature(&prioritized.plan);
            if history.iter().any(|h| h.plan_signature == signature) {
                client.emit(Event::NoveltyCollision {
                    iteration,
                    plan_signature: signature.clone(),
                    action: CollisionAction::Reask,
                });
                let note = format!(
                    "Your last proposal repeated an earlier strategy (signature {signature}). Propose a genuinely different one."
                );
                (prioritized, meta) =
                    self.plan_iteration(&mut client, &analysis, &view, &history, Some(&note))?;
                signature = plan_signature(&prioritized.plan);
                if history.iter().any(|h| h.plan_signature == signature) {
                    novelty_flagged = true;
                    client.emit(Event::NoveltyCollision {
                        iteration,
                        plan_signature: signature.clone(),
                        action: CollisionAction::AcceptedWithFlag,
                    });
                }
            }
            let plan = prioritized.plan;
            client.emit(Event::Plan {
                iteration,
                plan: plan.clone(),
                plan_signature: signature.clone(),
                truncated_from: meta.truncated_from,
                fallback: meta.fallback || prioritized.fallback,
            });

            let run = agents::run_plan(&mut client, self.catalog, &plan, &view, &analysis);
            if let Some((_, agents::AgentError::Llm(e))) = &run.failure {
                if e.is_fatal() {
                    return Err(SessionError::Replay(e.to_string()));
                }
            }
            if let Some((_, agents::AgentError::Prompt(e))) = run.failure.clone() {
                return Err(SessionError::Prompt(e));
            }

            let mut verdict = self.validate(
                &mut client,
                instance,
                &run.reports,
                iteration,
                &mut sandbox_spent_ms,
            )?;
            if let Some((role, e)) = &run.failure {
                verdict.rationale = format!("{} (agent {role} failed: {e})", verdict.rationale);
            }
            client.emit(Event::Verdict {
                iteration,
                verdict: verdict.clone(),
            });
            let fixed = verdict.is_fixed();
            history.push(IterationRecord {
                plan,
                reports: run.reports,
                verdict,
                plan_signature: signature,
                novelty_flagged,
            });
            if fixed {
                break;
            }
        }

        let agents_created_total: u32 = history.iter().map(|h| h.plan.profiles.len() as u32).sum();
        let fixed = history.last().is_some_and(|h| h.verdict.is_fixed());
        let llm_calls = client.calls();
        let wall_time_ms = self.clock.now_ms().saturating_sub(started);
        client.emit(Event::SessionEnd {
            fixed,
            iterations: history.len(),
            agents_created_total,
            llm_calls,
            wall_time_ms,
            diagnostic: None,
        });
        Ok(SessionOutcome {
            instance_id: instance.id.clone(),
            complexity: instance.complexity,
            fixed,
            iterations: history,
            agents_created_total,
            llm_calls,
            wall_time_ms,
            diagnostic: None,
        })
    }
}
