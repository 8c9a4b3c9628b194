//! One-shot baseline: a single unscaffolded completion per instance,
//! validated through the same sandbox path as adaptive sessions.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::llm::{ChatBackend, ChatMessage, LlmClient};
use crate::orchestrator::{Clock, OrchestratorConfig, SessionError};
use crate::prompts::{self, Catalog};
use crate::sandbox::{evaluate_candidate, Executor, ExecutorError};
use crate::transcript::{Event, EventSink, SessionKind, TRANSCRIPT_SCHEMA_VERSION};
use crate::types::{BugInstance, ComplexityLevel, InstanceView};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub instance_id: String,
    pub complexity: ComplexityLevel,
    pub fixed: bool,
    pub llm_calls: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// Code the model returned: the first fenced block, else the whole reply.
pub fn extract_code(response: &str) -> Option<String> {
    let code = crate::text::first_code_block(response).unwrap_or(response);
    let code = code.trim_matches('\n');
    (!code.trim().is_empty()).then(|| code.to_string())
}

pub fn run_one_shot(
    instance: &BugInstance,
    config: &OrchestratorConfig,
    catalog: &Catalog,
    executor: Option<&dyn Executor>,
    clock: &dyn Clock,
    backend: &mut dyn ChatBackend,
    sink: &mut dyn EventSink,
) -> Result<BaselineOutcome, SessionError> {
    let started = clock.now_ms();
    instance.validate().map_err(SessionError::InvalidConfig)?;
    let executor = executor.ok_or(SessionError::SandboxUnavailable)?;
    let view = InstanceView::new(instance).map_err(SessionError::Firewall)?;
    let prompt = catalog.render(
        prompts::ONE_SHOT_BASELINE,
        &[
            ("description", &view.description),
            ("language", &view.language),
            ("code", &view.buggy_code),
        ],
    )?;

    sink.emit(Event::SessionStart {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        session_kind: SessionKind::Baseline,
        instance: instance.redacted(),
        config: config.clone(),
        template_versions: catalog.versions(),
    });
    let mut client = LlmClient::new(backend, sink, &config.model);
    let finish = |client: &mut LlmClient<'_>, fixed: bool, diagnostic: Option<String>| {
        let llm_calls = client.calls();
        client.emit(Event::SessionEnd {
            fixed,
            iterations: 0,
            agents_created_total: 0,
            llm_calls,
            wall_time_ms: clock.now_ms().saturating_sub(started),
            diagnostic: diagnostic.clone(),
        });
        BaselineOutcome {
            instance_id: instance.id.clone(),
            complexity: instance.complexity,
            fixed,
            llm_calls,
            diagnostic,
        }
    };

    let response = match client.complete(&[ChatMessage::user(prompt)]) {
        Ok(r) => r,
        Err(e) if e.is_fatal() => return Err(SessionError::Replay(e.to_string())),
        Err(e) => return Ok(finish(&mut client, false, Some(format!("completion failed: {e}")))),
    };
    if instance.tests.is_empty() {
        return Ok(finish(
            &mut client,
            false,
            Some("instance has no tests; the baseline cannot be validated".into()),
        ));
    }
    let Some(code) = extract_code(&response.content) else {
        return Ok(finish(&mut client, false, Some("reply contained no code".into())));
    };
    match evaluate_candidate(&code, &instance.language, &instance.tests, &config.limits, executor) {
        Ok(report) => {
            let fixed = report.all_passed();
            let diagnostic = (!fixed).then(|| format!("sandbox: {}", report.describe()));
            client.emit(Event::Execution {
                iteration: 1,
                candidate_hash: crate::hash::sha256_hex(code.as_bytes()),
                report,
            });
            Ok(finish(&mut client, fixed, diagnostic))
        }
        Err(ExecutorError::ReplayMismatch(msg)) => Err(SessionError::Replay(msg)),
        Err(e) => {
            client.emit(Event::ExecutionFailed {
                iteration: 1,
                candidate_hash: crate::hash::sha256_hex(code.as_bytes()),
                error: e.clone(),
            });
            Ok(finish(&mut client, false, Some(format!("sandbox error: {e}"))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ModelConfig, ScriptedBackend};
    use crate::orchestrator::FrozenClock;
    use crate::sandbox::ScriptedExecutor;
    use crate::transcript::VecSink;
    use crate::types::{BugCategory, TestCase};
    use alloc::vec;

    fn instance() -> BugInstance {
        BugInstance {
            id: "echo".into(),
            title: "Echo".into(),
            description: "Print the input.".into(),
            buggy_code: "print(inpt())".into(),
            language: "python".into(),
            category: BugCategory::Reference,
            complexity: ComplexityLevel::Low,
            tests: vec![TestCase::exact("7", "7")],
            reference_solution: Some("print(input())".into()),
        }
    }

    fn run(reply: &str) -> (BaselineOutcome, ScriptedBackend) {
        let config = OrchestratorConfig {
            model: ModelConfig::scripted(),
            ..OrchestratorConfig::default()
        };
        let executor = ScriptedExecutor::new().with_program(
            "print(input())",
            crate::sandbox::ProgramBehavior::Echo,
        );
        let mut backend = ScriptedBackend::new([reply]);
        let mut sink = VecSink::new();
        let outcome = run_one_shot(
            &instance(),
            &config,
            &Catalog::builtin(),
            Some(&executor),
            &FrozenClock,
            &mut backend,
            &mut sink,
        )
        .unwrap();
        (outcome, backend)
    }

    #[test]
    fn correct_fix_passes() {
        let (outcome, backend) = run("Here you go:\n```python\nprint(input())\n```");
        assert!(outcome.fixed);
        assert_eq!(outcome.llm_calls, 1);
        let prompt = &backend.requests()[0];
        assert_eq!(prompt.len(), 1);
        assert!(prompt[0].content.contains("print(inpt())"));
        assert!(prompt[0].content.contains("Return the fixed code."));
        assert!(!prompt[0].content.contains("print(input())"));
    }

    #[test]
    fn prose_reply_is_not_fixed() {
        let (outcome, _) = run("I think the bug is a typo in the function name.");
        assert!(!outcome.fixed);
        assert_eq!(outcome.llm_calls, 1);
    }

    #[test]
    fn code_extraction() {
        assert_eq!(extract_code("```py\nx = 1\n```").as_deref(), Some("x = 1"));
        assert_eq!(extract_code("x = 1\n").as_deref(), Some("x = 1"));
        assert_eq!(extract_code("  \n"), None);
    }
}
