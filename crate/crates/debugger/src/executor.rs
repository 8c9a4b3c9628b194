//! Subprocess sandbox driving an external runner over the shim protocol:
//! one job JSON on stdin, one report JSON on stdout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use adaptive_debug_core::sandbox::{
    ExecutionJob, ExecutionReport, ExecutionStatus, Executor, ExecutorError,
};

/// Environment variable holding the runner command line.
pub const EXECUTOR_CMD_ENV: &str = "EXECUTOR_CMD";

const POLL: Duration = Duration::from_millis(5);
const STDERR_EXCERPT: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessExecutor {
    program: String,
    args: Vec<String>,
    grace: Duration,
}

impl ProcessExecutor {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            grace: Duration::from_millis(500),
        }
    }

    /// Split on whitespace; no shell quoting.
    pub fn from_command_line(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(Self::new(program, parts.collect()))
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(EXECUTOR_CMD_ENV)
            .ok()
            .and_then(|line| Self::from_command_line(&line))
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    /// Wall-clock cap for a whole job: every test at its limit, plus grace.
    pub fn deadline(&self, job: &ExecutionJob) -> Duration {
        let tests = job.tests.len().max(1) as u64;
        Duration::from_millis(job.time_limit_ms.saturating_mul(tests)) + self.grace
    }
}

impl Executor for ProcessExecutor {
    fn execute(&self, job: &ExecutionJob) -> Result<ExecutionReport, ExecutorError> {
        let payload = serde_json::to_vec(job).map_err(|e| ExecutorError::Protocol(e.to_string()))?;
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ExecutorError::Unavailable(format!("{}: {e}", self.program)))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        thread::spawn(move || {
            // A runner that exits without reading is reported via its status.
            let _ = stdin.write_all(&payload);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let deadline = self.deadline(job);
        let status = loop {
            match child.try_wait().map_err(|e| ExecutorError::Io(e.to_string()))? {
                Some(status) => break Some(status),
                None if started.elapsed() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                None => thread::sleep(POLL),
            }
        };
        let Some(status) = status else {
            // Grandchildren may keep the pipes open; do not wait for them.
            return Ok(ExecutionReport {
                status: ExecutionStatus::Timeout,
                per_test: Vec::new(),
                duration_ms: started.elapsed().as_millis() as u64,
            });
        };
        let stdout = reader
            .join()
            .expect("stdout reader")
            .map_err(|e| ExecutorError::Io(e.to_string()))?;
        let stderr = err_reader.join().expect("stderr reader");

        if !status.success() {
            let excerpt: String = String::from_utf8_lossy(&stderr).chars().take(STDERR_EXCERPT).collect();
            return Err(ExecutorError::Protocol(format!(
                "runner exited with {status}: {}",
                excerpt.trim()
            )));
        }
        serde_json::from_slice::<ExecutionReport>(&stdout)
            .map_err(|e| ExecutorError::Protocol(format!("malformed runner output: {e}")))
    }
}
