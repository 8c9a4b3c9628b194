//! Deterministic re-execution of recorded sessions.
//!
//! A transcript is its own recording: `completion` and `completion_failed`
//! events are served back in order, each checked against the hash of the
//! request that produced it, and `execution` events stand in for the sandbox.

use std::collections::VecDeque;
use std::sync::Mutex;

use adaptive_debug_core::llm::{request_hash, ChatBackend, ChatMessage, ChatResponse, LlmError, ModelConfig};
use adaptive_debug_core::sandbox::{ExecutionJob, ExecutionReport, Executor, ExecutorError};
use adaptive_debug_core::sha256_hex;
use adaptive_debug_core::transcript::{Event, SessionKind};
use adaptive_debug_core::{BugInstance, OrchestratorConfig};

#[derive(Debug, Clone)]
enum RecordedCall {
    Answered(String, ChatResponse),
    Failed(String, LlmError),
}

/// Serves recorded completions in order.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    calls: VecDeque<RecordedCall>,
    served: u64,
}

impl ReplayBackend {
    pub fn from_events(events: &[Event]) -> Self {
        let calls = events
            .iter()
            .filter_map(|e| match e {
                Event::Completion {
                    request_hash,
                    response,
                    ..
                } => Some(RecordedCall::Answered(request_hash.clone(), response.clone())),
                Event::CompletionFailed {
                    request_hash,
                    error,
                } => Some(RecordedCall::Failed(request_hash.clone(), error.clone())),
                _ => None,
            })
            .collect();
        Self { calls, served: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.calls.len()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(
        &mut self,
        _config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError> {
        let call_index = self.served;
        let Some(next) = self.calls.pop_front() else {
            return Err(LlmError::ReplayMismatch {
                call_index,
                reason: "the recording has no further completions".into(),
            });
        };
        self.served += 1;
        let actual = request_hash(messages);
        let (expected, result) = match next {
            RecordedCall::Answered(hash, response) => (hash, Ok(response)),
            RecordedCall::Failed(hash, error) => (hash, Err(error)),
        };
        if actual != expected {
            return Err(LlmError::ReplayMismatch {
                call_index,
                reason: format!("request hash {actual} differs from recorded {expected}"),
            });
        }
        result
    }
}

/// Serves recorded sandbox results in order.
#[derive(Debug, Default)]
pub struct ReplayExecutor {
    runs: Mutex<VecDeque<(String, Result<ExecutionReport, ExecutorError>)>>,
}

impl ReplayExecutor {
    pub fn from_events(events: &[Event]) -> Self {
        let runs = events
            .iter()
            .filter_map(|e| match e {
                Event::Execution {
                    candidate_hash,
                    report,
                    ..
                } => Some((candidate_hash.clone(), Ok(report.clone()))),
                Event::ExecutionFailed {
                    candidate_hash,
                    error,
                    ..
                } => Some((candidate_hash.clone(), Err(error.clone()))),
                _ => None,
            })
            .collect();
        Self {
            runs: Mutex::new(runs),
        }
    }
}

impl Executor for ReplayExecutor {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        let mut runs = self.runs.lock().expect("replay executor lock");
        let Some((expected, result)) = runs.pop_front() else {
            return Err(ExecutorError::ReplayMismatch(
                "the recording has no further executions".into(),
            ));
        };
        let actual = sha256_hex(job.code.as_bytes());
        if actual != expected {
            return Err(ExecutorError::ReplayMismatch(format!(
                "candidate hash {actual} differs from recorded {expected}"
            )));
        }
        result
    }
}

/// What a transcript says about the session that produced it.
#[derive(Debug, Clone)]
pub struct RecordedSession {
    pub kind: SessionKind,
    pub instance: BugInstance,
    pub config: OrchestratorConfig,
    pub template_versions: std::collections::BTreeMap<String, u32>,
    pub events: Vec<Event>,
}

impl RecordedSession {
    pub fn from_events(events: Vec<Event>) -> Result<Self, String> {
        match events.first() {
            Some(Event::SessionStart {
                session_kind,
                instance,
                config,
                template_versions,
                ..
            }) => Ok(Self {
                kind: *session_kind,
                instance: instance.clone(),
                config: config.clone(),
                template_versions: template_versions.clone(),
                events,
            }),
            Some(other) => Err(format!(
                "transcript starts with a {} event, expected session_start",
                other.kind()
            )),
            None => Err("transcript is empty".into()),
        }
    }

    pub fn backend(&self) -> ReplayBackend {
        ReplayBackend::from_events(&self.events)
    }

    pub fn executor(&self) -> ReplayExecutor {
        ReplayExecutor::from_events(&self.events)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("{0}")]
    Transcript(#[from] crate::transcript_io::TranscriptError),
    #[error("unusable recording: {0}")]
    Recording(String),
    #[error("prompt templates differ from the recording: recorded {recorded:?}, current {current:?}")]
    Templates {
        recorded: std::collections::BTreeMap<String, u32>,
        current: std::collections::BTreeMap<String, u32>,
    },
    #[error("replay diverged: {0}")]
    Diverged(String),
}

/// Outcome of re-running one recorded session.
#[derive(Debug, Clone, PartialEq)]
pub enum Replayed {
    Adaptive(adaptive_debug_core::SessionOutcome),
    Baseline(adaptive_debug_core::baseline::BaselineOutcome),
}

/// Re-run a recorded session against its own recording. Every recorded
/// completion must be consumed, in order, by identical requests.
pub fn replay_session(
    recorded: &RecordedSession,
    catalog: &adaptive_debug_core::Catalog,
    clock: &dyn adaptive_debug_core::orchestrator::Clock,
    sink: &mut dyn adaptive_debug_core::transcript::EventSink,
) -> Result<Replayed, ReplayError> {
    let current = catalog.versions();
    if current != recorded.template_versions {
        return Err(ReplayError::Templates {
            recorded: recorded.template_versions.clone(),
            current,
        });
    }
    let mut backend = recorded.backend();
    let executor = recorded.executor();
    let diverged = |e: adaptive_debug_core::SessionError| match e {
        adaptive_debug_core::SessionError::Replay(reason) => ReplayError::Diverged(reason),
        other => ReplayError::Recording(other.to_string()),
    };
    let replayed = match recorded.kind {
        SessionKind::Adaptive => {
            let orchestrator =
                adaptive_debug_core::Orchestrator::new(&recorded.config, catalog, Some(&executor), clock);
            Replayed::Adaptive(
                orchestrator
                    .run_session(&recorded.instance, &mut backend, sink)
                    .map_err(diverged)?,
            )
        }
        SessionKind::Baseline => Replayed::Baseline(
            adaptive_debug_core::baseline::run_one_shot(
                &recorded.instance,
                &recorded.config,
                catalog,
                Some(&executor),
                clock,
                &mut backend,
                sink,
            )
            .map_err(diverged)?,
        ),
    };
    if backend.remaining() > 0 {
        return Err(ReplayError::Diverged(format!(
            "session ended with {} recorded completions unused",
            backend.remaining()
        )));
    }
    Ok(replayed)
}

pub fn load_recording(path: &std::path::Path) -> Result<RecordedSession, ReplayError> {
    let events = crate::transcript_io::read_transcript(path)?;
    RecordedSession::from_events(events).map_err(ReplayError::Recording)
}
