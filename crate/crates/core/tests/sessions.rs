use adaptive_debug_core::sandbox::{
    ExecutionJob, ExecutionStatus, FnExecutor, PerTestResult, ProgramBehavior, ScriptedExecutor,
};
use adaptive_debug_core::transcript::{Event, VecSink};
use adaptive_debug_core::llm::ScriptedBackend;
use adaptive_debug_core::orchestrator::{FrozenClock, ValidationMode};
use adaptive_debug_core::*;
use serde_json::json;

const BUGGY: &str = "def double(x)\n    return x * 2\nprint(double(int(input())))";
const FIXED: &str = "def double(x):\n    return x * 2\nprint(double(int(input())))";
const HALF_FIXED: &str = "def double(x):\n    return x + 2\nprint(double(int(input())))";

fn instance(complexity: ComplexityLevel, category: BugCategory) -> BugInstance {
    BugInstance {
        id: "double-1".into(),
        title: "Double a number".into(),
        description: "Read an integer and print twice its value.".into(),
        buggy_code: BUGGY.into(),
        language: "python".into(),
        category,
        complexity,
        tests: vec![TestCase::exact("3", "6"), TestCase::exact("10", "20")],
        reference_solution: None,
    }
}

fn executor() -> ScriptedExecutor {
    ScriptedExecutor::new()
        .with_outputs(FIXED, [("3", "6"), ("10", "20")])
        .with_outputs(HALF_FIXED, [("3", "5"), ("10", "12")])
}

fn analysis(categories: &[&str]) -> String {
    json!({"detected_categories": categories, "summary": "bugs found", "evidence": ["line 1"]}).to_string()
}

fn profiles(roles: &[(&str, &str)]) -> String {
    let profiles: Vec<_> = roles
        .iter()
        .map(|(r, o)| json!({"role_name": r, "objective": o, "task_prompt": format!("You are a {r}. {o}.")}))
        .collect();
    json!({"strategy_summary": "plan", "profiles": profiles}).to_string()
}

fn priorities(roles: &[&str]) -> String {
    let map: serde_json::Map<_, _> = roles
        .iter()
        .enumerate()
        .map(|(i, r)| (r.to_string(), json!(i + 1)))
        .collect();
    json!({ "priorities": map }).to_string()
}

fn report(status: &str, code: Option<&str>) -> String {
    json!({"findings": "looked at it", "recommendations": "", "candidate_code": code, "claimed_status": status}).to_string()
}

fn run(
    config: &OrchestratorConfig,
    instance: &BugInstance,
    script: Vec<String>,
    executor: &dyn Executor,
) -> (SessionOutcome, VecSink, ScriptedBackend) {
    let catalog = Catalog::builtin();
    let orchestrator = Orchestrator::new(config, &catalog, Some(executor), &FrozenClock);
    let mut backend = ScriptedBackend::new(script);
    let mut sink = VecSink::new();
    let outcome = orchestrator
        .run_session(instance, &mut backend, &mut sink)
        .expect("session runs");
    (outcome, sink, backend)
}

fn config() -> OrchestratorConfig {
    OrchestratorConfig {
        model: ModelConfig::scripted(),
        ..OrchestratorConfig::default()
    }
}

#[test]
fn low_complexity_syntax_bug_needs_one_agent() {
    let script = vec![
        analysis(&["syntax"]),
        profiles(&[("syntax checker", "add the missing colon")]),
        report("resolved", Some(FIXED)),
    ];
    let inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    let (outcome, sink, backend) = run(&config(), &inst, script, &executor());
    assert!(outcome.fixed);
    assert_eq!(outcome.iterations.len(), 1);
    assert_eq!(outcome.agents_created_total, 1);
    assert_eq!(outcome.llm_calls, 3);
    assert_eq!(backend.remaining(), 0);
    assert_eq!(outcome.final_code(), Some(FIXED));
    assert_eq!(sink.count("completion"), 3);
    assert_eq!(sink.count("execution"), 1);
    assert!(outcome.validate(3, 5).is_ok());
    let verdict = &outcome.iterations[0].verdict;
    assert_eq!(
        verdict.evidence.as_ref().map(|r| r.status),
        Some(ExecutionStatus::AllPassed)
    );
}

#[test]
fn failed_iteration_triggers_a_different_plan() {
    let first = [("syntax checker", "fix syntax"), ("logic verifier", "check results"), ("reference resolver", "fix names")];
    let second = [("logic verifier", "recompute doubling"), ("syntax checker", "recheck syntax")];
    let script = vec![
        analysis(&["multiple"]),
        profiles(&first),
        priorities(&["syntax checker", "logic verifier", "reference resolver"]),
        report("partial", Some(HALF_FIXED)),
        report("resolved", Some(HALF_FIXED)),
        report("blocked", None),
        profiles(&second),
        priorities(&["logic verifier", "syntax checker"]),
        report("resolved", Some(FIXED)),
        report("partial", None),
    ];
    let inst = instance(ComplexityLevel::High, BugCategory::Multiple);
    let (outcome, sink, backend) = run(&config(), &inst, script, &executor());
    assert!(outcome.fixed);
    assert_eq!(outcome.iterations.len(), 2);
    assert_eq!(outcome.agents_created_total, 5);
    assert!(!outcome.iterations[0].verdict.is_fixed());
    assert_ne!(outcome.iterations[0].plan_signature, outcome.iterations[1].plan_signature);
    assert_eq!(sink.count("novelty_collision"), 0);
    assert_eq!(backend.remaining(), 0);

    // The replan prompt carries the history and the novelty instruction.
    let replan = &backend.requests()[6][1].content;
    assert!(replan.contains(&outcome.iterations[0].plan_signature));
    assert!(replan.contains("must be different from every strategy listed"));
    assert!(replan.contains("sandbox: 0 of 2 tests passed"));
}

#[test]
fn repeated_plan_is_reasked_then_flagged() {
    let same = [("general debugger", "fix everything")];
    let script = vec![
        analysis(&["logic"]),
        profiles(&same),
        report("resolved", Some(HALF_FIXED)),
        profiles(&same),
        profiles(&[("General  Debugger", "fix   everything")]),
        report("resolved", Some(FIXED)),
    ];
    let inst = instance(ComplexityLevel::Medium, BugCategory::Logic);
    let config = OrchestratorConfig {
        max_iterations: 2,
        ..config()
    };
    let (outcome, sink, backend) = run(&config, &inst, script, &executor());
    assert_eq!(backend.remaining(), 0);
    assert_eq!(outcome.iterations.len(), 2);
    assert!(outcome.fixed);
    assert!(outcome.iterations[1].novelty_flagged);
    assert_eq!(outcome.iterations[0].plan_signature, outcome.iterations[1].plan_signature);
    let actions: Vec<_> = sink
        .events
        .iter()
        .filter_map(|e| match e {
            Event::NoveltyCollision { action, .. } => Some(*action),
            _ => None,
        })
        .collect();
    assert_eq!(
        actions,
        [
            transcript::CollisionAction::Reask,
            transcript::CollisionAction::AcceptedWithFlag
        ]
    );
    assert!(backend.requests()[4][1].content.contains("repeated an earlier strategy"));
}

#[test]
fn garbage_everywhere_still_terminates() {
    let script: Vec<String> = (0..200).map(|i| format!("no json here {i}")).collect();
    let inst = instance(ComplexityLevel::High, BugCategory::Multiple);
    let (outcome, _, backend) = run(&config(), &inst, script, &executor());
    assert!(!outcome.fixed);
    assert_eq!(outcome.iterations.len(), 0);
    assert_eq!(outcome.llm_calls, 3);
    assert!(outcome.diagnostic.as_deref().unwrap().contains("analysis failed"));
    assert_eq!(backend.remaining(), 197);
}

#[test]
fn garbage_after_analysis_uses_fallback_plans() {
    let mut script = vec![analysis(&["multiple"])];
    script.extend((0..200).map(|i| format!("still not json {i}")));
    let inst = instance(ComplexityLevel::High, BugCategory::Multiple);
    let (outcome, sink, _) = run(&config(), &inst, script, &executor());
    assert!(!outcome.fixed);
    assert_eq!(outcome.iterations.len(), 3);
    let roles: Vec<_> = outcome
        .iterations
        .iter()
        .map(|r| r.plan.profiles[0].role_name.as_str())
        .collect();
    assert_eq!(roles, ["syntax checker", "reference resolver", "logic verifier"]);
    assert!(outcome.validate(3, 5).is_ok());
    assert!(sink.events.iter().any(|e| matches!(e, Event::Plan { fallback: true, .. })));
}

#[test]
fn oversized_team_is_truncated() {
    let many: Vec<(String, String)> = (0..9).map(|i| (format!("agent {i}"), format!("task {i}"))).collect();
    let refs: Vec<(&str, &str)> = many.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let names: Vec<&str> = refs.iter().take(5).map(|(a, _)| *a).collect();
    let mut script = vec![analysis(&["logic"]), profiles(&refs), priorities(&names)];
    script.extend((0..5).map(|_| report("partial", None)));
    let config = OrchestratorConfig {
        max_iterations: 1,
        ..config()
    };
    let inst = instance(ComplexityLevel::High, BugCategory::Logic);
    let (outcome, sink, _) = run(&config, &inst, script, &executor());
    assert_eq!(outcome.agents_created_total, 5);
    assert!(sink
        .events
        .iter()
        .any(|e| matches!(e, Event::Plan { truncated_from: Some(9), .. })));
}

#[test]
fn forged_all_passed_report_is_not_trusted() {
    // Claims success but prints the wrong answers.
    let forger = FnExecutor(|job: &ExecutionJob| {
        Ok(sandbox::ExecutionReport {
            status: ExecutionStatus::AllPassed,
            per_test: (0..job.tests.len())
                .map(|i| PerTestResult::new(i, true, "wrong", ""))
                .collect(),
            duration_ms: 1,
        })
    });
    let script = vec![
        analysis(&["syntax"]),
        profiles(&[("syntax checker", "fix")]),
        report("resolved", Some(FIXED)),
    ];
    let config = OrchestratorConfig {
        max_iterations: 1,
        validation_mode: Some(ValidationMode::TestGated),
        ..config()
    };
    let inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    let (outcome, _, _) = run(&config, &inst, script, &forger);
    assert!(!outcome.fixed);
    let evidence = outcome.iterations[0].verdict.evidence.as_ref().unwrap();
    assert_eq!(evidence.status, ExecutionStatus::SomeFailed);
}

#[test]
fn judged_mode_asks_the_main_agent() {
    let mut inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    inst.tests.clear();
    let script = vec![
        analysis(&["syntax"]),
        profiles(&[("syntax checker", "fix")]),
        report("resolved", Some(FIXED)),
        json!({"status": "fixed", "rationale": "colon added"}).to_string(),
    ];
    let catalog = Catalog::builtin();
    let config = config();
    let orchestrator = Orchestrator::new(&config, &catalog, None, &FrozenClock);
    let mut backend = ScriptedBackend::new(script);
    let mut sink = VecSink::new();
    let outcome = orchestrator.run_session(&inst, &mut backend, &mut sink).unwrap();
    assert!(outcome.fixed);
    assert!(outcome.iterations[0].verdict.evidence.is_none());
    assert_eq!(outcome.llm_calls, 4);
}

#[test]
fn test_gated_without_executor_is_an_error() {
    let catalog = Catalog::builtin();
    let config = config();
    let orchestrator = Orchestrator::new(&config, &catalog, None, &FrozenClock);
    let inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    let err = orchestrator
        .run_session(&inst, &mut ScriptedBackend::new(Vec::<String>::new()), &mut VecSink::new())
        .unwrap_err();
    assert_eq!(err, SessionError::SandboxUnavailable);
}

#[test]
fn reference_solution_never_reaches_the_model() {
    let mut inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    inst.reference_solution = Some("SECRET_REFERENCE_SOLUTION = 1".into());
    let script = vec![
        analysis(&["syntax"]),
        profiles(&[("syntax checker", "fix")]),
        report("resolved", Some(FIXED)),
    ];
    let (_, sink, backend) = run(&config(), &inst, script, &executor());
    for request in backend.requests() {
        for message in request {
            assert!(!message.content.contains("SECRET_REFERENCE_SOLUTION"));
        }
    }
    for event in &sink.events {
        let line = serde_json::to_string(event).unwrap();
        assert!(!line.contains("SECRET_REFERENCE_SOLUTION"), "{line}");
    }
}

#[test]
fn syntax_error_candidate_is_not_fixed() {
    let script = vec![
        analysis(&["syntax"]),
        profiles(&[("syntax checker", "fix")]),
        report("resolved", Some("def double(x) return")),
    ];
    let config = OrchestratorConfig {
        max_iterations: 1,
        ..config()
    };
    let inst = instance(ComplexityLevel::Low, BugCategory::Syntax);
    let executor = executor().with_program("x", ProgramBehavior::Echo);
    let (outcome, _, _) = run(&config, &inst, script, &executor);
    assert!(!outcome.fixed);
    assert_eq!(
        outcome.iterations[0].verdict.evidence.as_ref().unwrap().status,
        ExecutionStatus::CompileOrSyntaxError
    );
}
