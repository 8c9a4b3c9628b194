//! Session transcript events.
//!
//! A transcript is an append-only sequence of [`Event`]s, one JSON object per
//! line when written to disk. Every model completion is recorded with the
//! hash of the request that produced it, so a transcript doubles as a
//! recording that can be replayed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::llm::{ChatResponse, LlmError};
use crate::orchestrator::OrchestratorConfig;
use crate::sandbox::{ExecutionReport, ExecutorError};
use crate::types::{AgentReport, BugInstance, CodeAnalysis, DebugPlan, Verdict};

/// Bumped whenever an event's shape changes incompatibly.
pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Adaptive,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionAction {
    /// The plan was discarded and the main agent asked again.
    Reask,
    /// The repeated plan was accepted after the re-ask also collided.
    AcceptedWithFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Event {
    SessionStart {
        schema_version: u32,
        session_kind: SessionKind,
        /// Redacted: never carries the reference solution.
        instance: BugInstance,
        config: OrchestratorConfig,
        template_versions: BTreeMap<String, u32>,
    },
    Analysis {
        analysis: CodeAnalysis,
    },
    Plan {
        iteration: u32,
        plan: DebugPlan,
        plan_signature: String,
        /// Number of profiles the model proposed when more than the cap.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncated_from: Option<usize>,
        #[serde(default)]
        fallback: bool,
    },
    AgentReport {
        iteration: u32,
        report: AgentReport,
    },
    Execution {
        iteration: u32,
        candidate_hash: String,
        report: ExecutionReport,
    },
    Verdict {
        iteration: u32,
        verdict: Verdict,
    },
    NoveltyCollision {
        iteration: u32,
        plan_signature: String,
        action: CollisionAction,
    },
    Completion {
        call_index: u64,
        request_hash: String,
        response: ChatResponse,
    },
    /// A completion the backend did not answer; replayed as the same error.
    CompletionFailed {
        request_hash: String,
        error: LlmError,
    },
    /// The sandbox could not evaluate a candidate.
    ExecutionFailed {
        iteration: u32,
        candidate_hash: String,
        error: ExecutorError,
    },
    SessionEnd {
        fixed: bool,
        iterations: usize,
        agents_created_total: u32,
        llm_calls: u64,
        wall_time_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagnostic: Option<String>,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SessionStart { .. } => "session_start",
            Event::Analysis { .. } => "analysis",
            Event::Plan { .. } => "plan",
            Event::AgentReport { .. } => "agent_report",
            Event::Execution { .. } => "execution",
            Event::Verdict { .. } => "verdict",
            Event::NoveltyCollision { .. } => "novelty_collision",
            Event::Completion { .. } => "completion",
            Event::CompletionFailed { .. } => "completion_failed",
            Event::ExecutionFailed { .. } => "execution_failed",
            Event::SessionEnd { .. } => "session_end",
        }
    }
}

pub trait EventSink {
    fn emit(&mut self, event: Event);
}

impl<S: EventSink + ?Sized> EventSink for &mut S {
    fn emit(&mut self, event: Event) {
        (**self).emit(event)
    }
}

/// Drops every event.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _event: Event) {}
}

/// Keeps events in memory.
#[derive(Debug, Default, Clone)]
pub struct VecSink {
    pub events: Vec<Event>,
}

impl VecSink {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.events.iter().filter(|e| e.kind() == kind).count()
    }
}

impl EventSink for VecSink {
    fn emit(&mut self, event: Event) {
        self.events.push(event);
    }
}
