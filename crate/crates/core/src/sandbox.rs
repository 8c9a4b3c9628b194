//! Running candidate fixes against test cases.
//!
//! The [`Executor`] trait abstracts over where code actually runs. The std
//! crate ships a subprocess executor speaking the shim protocol; this module
//! ships [`ScriptedExecutor`] for deterministic tests and replays.
//!
//! [`evaluate_candidate`] never trusts the executor's pass/fail flags: it
//! re-compares every actual output with the test's expected output and derives
//! the overall status from that.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::types::{TestCase, TypeError};

pub const SHIM_PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    AllPassed,
    SomeFailed,
    #[serde(rename = "syntax_error")]
    CompileOrSyntaxError,
    Timeout,
    RuntimeError,
    ExecutorError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerTestResult {
    pub index: usize,
    pub passed: bool,
    #[serde(default)]
    pub actual_output: String,
    #[serde(default)]
    pub stderr_excerpt: String,
}

impl PerTestResult {
    pub fn new(
        index: usize,
        passed: bool,
        actual_output: impl Into<String>,
        stderr_excerpt: impl Into<String>,
    ) -> Self {
        Self {
            index,
            passed,
            actual_output: actual_output.into(),
            stderr_excerpt: stderr_excerpt.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub status: ExecutionStatus,
    #[serde(default)]
    pub per_test: Vec<PerTestResult>,
    #[serde(default)]
    pub duration_ms: u64,
}

impl ExecutionReport {
    pub fn all_passed(&self) -> bool {
        self.status == ExecutionStatus::AllPassed && self.per_test.iter().all(|t| t.passed)
    }

    pub fn failing_indices(&self) -> Vec<usize> {
        self.per_test
            .iter()
            .filter(|t| !t.passed)
            .map(|t| t.index)
            .collect()
    }

    /// One-line human summary used in verdict rationales.
    pub fn describe(&self) -> String {
        let passed = self.per_test.iter().filter(|t| t.passed).count();
        match self.status {
            ExecutionStatus::AllPassed => {
                format!("all {} tests passed", self.per_test.len())
            }
            ExecutionStatus::SomeFailed => format!(
                "{passed} of {} tests passed; failing test indices: {:?}",
                self.per_test.len(),
                self.failing_indices()
            ),
            ExecutionStatus::CompileOrSyntaxError => {
                let detail = self
                    .per_test
                    .iter()
                    .map(|t| t.stderr_excerpt.as_str())
                    .find(|s| !s.is_empty());
                match detail {
                    Some(detail) => format!("candidate does not compile: {detail}"),
                    None => "candidate does not compile".to_string(),
                }
            }
            ExecutionStatus::Timeout => "candidate exceeded the time limit".to_string(),
            ExecutionStatus::RuntimeError => format!(
                "runtime error; failing test indices: {:?}",
                self.failing_indices()
            ),
            ExecutionStatus::ExecutorError => "executor error".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLimits {
    pub time_limit_ms: u64,
    pub memory_limit_mb: u64,
    /// Cumulative execution time a whole session may spend in the sandbox.
    pub total_session_budget_ms: u64,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        Self {
            time_limit_ms: 5000,
            memory_limit_mb: 256,
            total_session_budget_ms: 120_000,
        }
    }
}

impl ResourceLimits {
    pub fn validate(&self) -> Result<(), TypeError> {
        if self.time_limit_ms == 0 || self.memory_limit_mb == 0 || self.total_session_budget_ms == 0
        {
            return Err(TypeError::new("ResourceLimits", "all limits must be positive"));
        }
        Ok(())
    }
}

/// A test as sent over the shim protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireTest {
    pub input: String,
    pub expected_output: String,
}

/// The job object written to the executor's stdin. Field order is part of
/// the protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionJob {
    pub protocol_version: u32,
    pub language: String,
    pub code: String,
    pub tests: Vec<WireTest>,
    pub time_limit_ms: u64,
    pub memory_limit_mb: u64,
}

impl ExecutionJob {
    pub fn new(language: &str, code: &str, tests: &[TestCase], limits: &ResourceLimits) -> Self {
        Self {
            protocol_version: SHIM_PROTOCOL_VERSION,
            language: language.to_string(),
            code: code.to_string(),
            tests: tests
                .iter()
                .map(|t| WireTest {
                    input: t.input.clone(),
                    expected_output: t.expected_output.clone(),
                })
                .collect(),
            time_limit_ms: limits.time_limit_ms,
            memory_limit_mb: limits.memory_limit_mb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum ExecutorError {
    #[error("executor unavailable: {0}")]
    Unavailable(String),
    #[error("executor violated the shim protocol: {0}")]
    Protocol(String),
    #[error("executor i/o failure: {0}")]
    Io(String),
    #[error("replayed execution diverged: {0}")]
    ReplayMismatch(String),
}

pub trait Executor {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError>;
}

impl<E: Executor + ?Sized> Executor for &E {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        (**self).execute(job)
    }
}

impl<E: Executor + ?Sized> Executor for alloc::boxed::Box<E> {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        (**self).execute(job)
    }
}

/// Wraps a closure as an executor.
pub struct FnExecutor<F>(pub F);

impl<F> Executor for FnExecutor<F>
where
    F: Fn(&ExecutionJob) -> Result<ExecutionReport, ExecutorError>,
{
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        (self.0)(job)
    }
}

/// Run `candidate` against `tests` and return a report whose pass/fail flags
/// were recomputed from the actual outputs.
pub fn evaluate_candidate(
    candidate: &str,
    language: &str,
    tests: &[TestCase],
    limits: &ResourceLimits,
    executor: &dyn Executor,
) -> Result<ExecutionReport, ExecutorError> {
    if tests.is_empty() {
        return Err(ExecutorError::Protocol("no tests to run".into()));
    }
    let job = ExecutionJob::new(language, candidate, tests, limits);
    let mut report = executor.execute(&job)?;

    match report.status {
        ExecutionStatus::ExecutorError => {
            return Err(ExecutorError::Protocol(
                "executor reported executor_error".into(),
            ))
        }
        ExecutionStatus::AllPassed | ExecutionStatus::SomeFailed => {
            let complete = report.per_test.len() == tests.len()
                && report.per_test.iter().enumerate().all(|(i, t)| t.index == i);
            if !complete {
                return Err(ExecutorError::Protocol(format!(
                    "expected {} per-test results indexed 0..{}, got {}",
                    tests.len(),
                    tests.len(),
                    report.per_test.len()
                )));
            }
        }
        _ => {}
    }

    for result in &mut report.per_test {
        let test = tests.get(result.index).ok_or_else(|| {
            ExecutorError::Protocol(format!("per-test index {} out of range", result.index))
        })?;
        result.passed = test.matches(&result.actual_output);
    }

    if matches!(
        report.status,
        ExecutionStatus::AllPassed | ExecutionStatus::SomeFailed
    ) {
        report.status = if report.per_test.iter().all(|t| t.passed) {
            ExecutionStatus::AllPassed
        } else {
            ExecutionStatus::SomeFailed
        };
    } else {
        // Nothing but a clean run may count as a pass.
        for result in &mut report.per_test {
            if !result.stderr_excerpt.is_empty() {
                result.passed = false;
            }
        }
    }
    Ok(report)
}

/// What a scripted program does when run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProgramBehavior {
    /// Prints the mapped output for each input; unmapped inputs crash.
    Outputs { outputs: BTreeMap<String, String> },
    /// Prints its input.
    Echo,
    #[default]
    SyntaxError,
    Timeout,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedProgram {
    pub code: String,
    pub behavior: ProgramBehavior,
}

/// Deterministic executor: looks the candidate up in a table of known
/// programs (compared line by line, trailing whitespace ignored). Unknown
/// candidates get the `fallback` behavior.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptedExecutor {
    #[serde(default)]
    pub programs: Vec<ScriptedProgram>,
    #[serde(default)]
    pub fallback: ProgramBehavior,
}

impl ScriptedExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_program(mut self, code: impl Into<String>, behavior: ProgramBehavior) -> Self {
        self.programs.push(ScriptedProgram {
            code: code.into(),
            behavior,
        });
        self
    }

    /// A program that prints the expected output for each listed input.
    pub fn with_outputs<I, K, V>(self, code: impl Into<String>, outputs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let outputs = outputs
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .collect();
        self.with_program(code, ProgramBehavior::Outputs { outputs })
    }

    fn behavior_for(&self, code: &str) -> &ProgramBehavior {
        let wanted = crate::text::trimmed_lines(code);
        self.programs
            .iter()
            .find(|p| crate::text::trimmed_lines(&p.code) == wanted)
            .map(|p| &p.behavior)
            .unwrap_or(&self.fallback)
    }
}

impl Executor for ScriptedExecutor {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        let report = match self.behavior_for(&job.code) {
            ProgramBehavior::SyntaxError => ExecutionReport {
                status: ExecutionStatus::CompileOrSyntaxError,
                per_test: Vec::new(),
                duration_ms: 0,
            },
            ProgramBehavior::Timeout => ExecutionReport {
                status: ExecutionStatus::Timeout,
                per_test: Vec::new(),
                duration_ms: job.time_limit_ms,
            },
            ProgramBehavior::RuntimeError => ExecutionReport {
                status: ExecutionStatus::RuntimeError,
                per_test: (0..job.tests.len())
                    .map(|i| PerTestResult::new(i, false, "", "scripted runtime error"))
                    .collect(),
                duration_ms: 0,
            },
            ProgramBehavior::Echo => run_per_test(job, |input| Some(input.to_string())),
            ProgramBehavior::Outputs { outputs } => {
                run_per_test(job, |input| outputs.get(input).cloned())
            }
        };
        Ok(report)
    }
}

fn run_per_test(job: &ExecutionJob, output_for: impl Fn(&str) -> Option<String>) -> ExecutionReport {
    let mut crashed = false;
    let per_test: Vec<PerTestResult> = job
        .tests
        .iter()
        .enumerate()
        .map(|(i, t)| match output_for(&t.input) {
            Some(out) => {
                let passed = crate::text::trimmed_lines(&out)
                    == crate::text::trimmed_lines(&t.expected_output);
                PerTestResult::new(i, passed, out, "")
            }
            None => {
                crashed = true;
                PerTestResult::new(i, false, "", "no scripted output for this input")
            }
        })
        .collect();
    let status = if crashed {
        ExecutionStatus::RuntimeError
    } else if per_test.iter().all(|t| t.passed) {
        ExecutionStatus::AllPassed
    } else {
        ExecutionStatus::SomeFailed
    };
    ExecutionReport {
        status,
        per_test,
        duration_ms: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Comparison;
    use alloc::vec;

    fn three_tests() -> Vec<TestCase> {
        vec![
            TestCase::exact("1", "2"),
            TestCase::exact("2", "4"),
            TestCase::exact("3", "6"),
        ]
    }

    #[test]
    fn correct_solution_passes_all() {
        let exec = ScriptedExecutor::new()
            .with_outputs("good", [("1", "2"), ("2", "4"), ("3", "6")]);
        let report =
            evaluate_candidate("good", "python", &three_tests(), &ResourceLimits::default(), &exec)
                .unwrap();
        assert_eq!(report.status, ExecutionStatus::AllPassed);
        assert_eq!(report.per_test.len(), 3);
        assert!(report.per_test.iter().all(|t| t.passed));
    }

    #[test]
    fn wrong_value_on_second_test_only() {
        let exec =
            ScriptedExecutor::new().with_outputs("bad", [("1", "2"), ("2", "5"), ("3", "6")]);
        let report =
            evaluate_candidate("bad", "python", &three_tests(), &ResourceLimits::default(), &exec)
                .unwrap();
        assert_eq!(report.status, ExecutionStatus::SomeFailed);
        assert!(report.per_test[0].passed);
        assert!(!report.per_test[1].passed);
        assert!(report.per_test[2].passed);
        assert_eq!(report.failing_indices(), [1]);
        assert!(report.describe().contains("[1]"));
    }

    #[test]
    fn unknown_candidate_uses_fallback() {
        let exec = ScriptedExecutor::new();
        let report =
            evaluate_candidate("???", "python", &three_tests(), &ResourceLimits::default(), &exec)
                .unwrap();
        assert_eq!(report.status, ExecutionStatus::CompileOrSyntaxError);
        assert!(report.per_test.is_empty());
    }

    #[test]
    fn forged_pass_flags_are_recomputed() {
        let forged = FnExecutor(|job: &ExecutionJob| {
            Ok(ExecutionReport {
                status: ExecutionStatus::AllPassed,
                per_test: (0..job.tests.len())
                    .map(|i| PerTestResult::new(i, true, "wrong", ""))
                    .collect(),
                duration_ms: 1,
            })
        });
        let report =
            evaluate_candidate("x", "python", &three_tests(), &ResourceLimits::default(), &forged)
                .unwrap();
        assert_eq!(report.status, ExecutionStatus::SomeFailed);
        assert!(report.per_test.iter().all(|t| !t.passed));
    }

    #[test]
    fn incomplete_report_is_a_protocol_error() {
        let short = FnExecutor(|_: &ExecutionJob| {
            Ok(ExecutionReport {
                status: ExecutionStatus::AllPassed,
                per_test: vec![PerTestResult::new(0, true, "2", "")],
                duration_ms: 1,
            })
        });
        let err =
            evaluate_candidate("x", "python", &three_tests(), &ResourceLimits::default(), &short)
                .unwrap_err();
        assert!(matches!(err, ExecutorError::Protocol(_)));
    }

    #[test]
    fn numeric_comparison_is_applied() {
        let tests = vec![TestCase {
            input: "".into(),
            expected_output: "0.333333".into(),
            comparison: Comparison::Numeric { tolerance: 1e-4 },
        }];
        let exec = ScriptedExecutor::new().with_outputs("c", [("", "0.3333333333")]);
        let report =
            evaluate_candidate("c", "python", &tests, &ResourceLimits::default(), &exec).unwrap();
        assert_eq!(report.status, ExecutionStatus::AllPassed);
    }

    #[test]
    fn job_wire_format_field_order() {
        let job = ExecutionJob::new(
            "python",
            "print(input())",
            &[TestCase::exact("7", "7")],
            &ResourceLimits::default(),
        );
        assert_eq!(
            serde_json::to_string(&job).unwrap(),
            r#"{"protocol_version":1,"language":"python","code":"print(input())","tests":[{"input":"7","expected_output":"7"}],"time_limit_ms":5000,"memory_limit_mb":256}"#
        );
    }

    #[test]
    fn status_wire_names() {
        let names: Vec<String> = [
            ExecutionStatus::AllPassed,
            ExecutionStatus::SomeFailed,
            ExecutionStatus::CompileOrSyntaxError,
            ExecutionStatus::Timeout,
            ExecutionStatus::RuntimeError,
        ]
        .iter()
        .map(|s| serde_json::to_string(s).unwrap())
        .collect();
        assert_eq!(
            names,
            [
                "\"all_passed\"",
                "\"some_failed\"",
                "\"syntax_error\"",
                "\"timeout\"",
                "\"runtime_error\""
            ]
        );
    }
}
