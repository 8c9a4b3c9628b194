//! Command line: `debug`, `bench`, `baseline`, `report`, `replay`.
//!
//! Exit codes: 0 success, 1 bug not fixed (debug) or replay diverged,
//! 2 usage or input error, 3 environment error (missing API key or
//! executor, unwritable output).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use adaptive_debug_core::llm::{BackendKind, ChatBackend, ModelConfig};
use adaptive_debug_core::orchestrator::ValidationMode;
use adaptive_debug_core::sandbox::{Executor, ResourceLimits, ScriptedExecutor};
use adaptive_debug_core::{
    BugCategory, BugInstance, Catalog, ComplexityLevel, Orchestrator, OrchestratorConfig,
    SessionError, SessionOutcome, TestCase,
};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BackendFactory, BenchError, Harness, RunManifest};
use crate::dataset::{load_dataset, DatasetError, DatasetFilter};
use crate::executor::{ProcessExecutor, EXECUTOR_CMD_ENV};
use crate::http::HttpChatBackend;
use crate::replay::{load_recording, replay_session, ReplayError, Replayed};
use crate::report::{self, ReportFormat, ReportRun};
use crate::script::ScriptBook;
use crate::transcript_io::JsonlSink;
use crate::SystemClock;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_FIXED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ENVIRONMENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "adaptive-debug", version, about = "Adaptive multi-agent program debugger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Debug one program.
    Debug(DebugArgs),
    /// Run adaptive sessions (and optionally baselines) over a dataset.
    Bench(BenchArgs),
    /// Run one-shot baselines over a dataset.
    Baseline(BaselineArgs),
    /// Render fix rates and gains from outcome files.
    Report(ReportArgs),
    /// Re-execute a recorded session or benchmark run from its transcripts.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    /// OpenAI-compatible chat completions endpoint.
    Http,
    /// Replies read from --script.
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExecutorChoice {
    /// Runner command from EXECUTOR_CMD.
    Process,
    /// Program table read from --executor-rules.
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValidationChoice {
    /// Tests when the instance has any, else the main agent's judgment.
    Auto,
    Tests,
    Judge,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "http")]
    backend: BackendChoice,
    /// Script file for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Chat completions URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    /// Environment variable holding the API key.
    #[arg(long)]
    api_key_env: Option<String>,
}

#[derive(Debug, Args)]
struct SessionArgs {
    #[arg(long, default_value_t = 3)]
    max_iterations: u32,
    #[arg(long, default_value_t = 5)]
    max_agents: u32,
    #[arg(long, value_enum, default_value = "auto")]
    validation: ValidationChoice,
    #[arg(long, value_enum, default_value = "process")]
    executor: ExecutorChoice,
    /// Scripted executor table (JSON).
    #[arg(long)]
    executor_rules: Option<PathBuf>,
    /// Directory of prompt template overrides (*.txt).
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
    /// Per-test time limit.
    #[arg(long)]
    time_limit_ms: Option<u64>,
    #[arg(long)]
    memory_limit_mb: Option<u64>,
}

#[derive(Debug, Args)]
struct DebugArgs {
    /// Program to debug.
    #[arg(long)]
    code: PathBuf,
    /// JSON array of {"input", "expected_output"} test cases.
    #[arg(long)]
    tests: Option<PathBuf>,
    /// Recorded bug category label.
    #[arg(long, default_value = "multiple")]
    category: BugCategory,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    description: Option<String>,
    #[arg(long, default_value = "python")]
    language: String,
    /// Transcript path (default: <code>.transcript.jsonl).
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// JSON Lines dataset.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    limit: Option<usize>,
    /// Seed for the instance order.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only these categories (repeatable).
    #[arg(long = "category")]
    categories: Vec<BugCategory>,
    /// Keep only these complexity levels (repeatable).
    #[arg(long = "complexity")]
    complexities: Vec<ComplexityLevel>,
    #[arg(long, default_value_t = 1)]
    concurrency: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Also run one-shot baselines and report gains.
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "baseline-out")]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Adaptive outcomes (repeatable, one per run).
    #[arg(long, required = true)]
    outcomes: Vec<PathBuf>,
    /// Baseline outcomes, paired with --outcomes by position.
    #[arg(long)]
    baseline_outcomes: Vec<PathBuf>,
    /// Run labels, paired with --outcomes by position.
    #[arg(long)]
    label: Vec<String>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: ReportFormat,
    /// Also write the report and figure series here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// A session transcript, or a bench output directory.
    #[arg(long)]
    transcript: PathBuf,
    /// New transcript file, or output directory when replaying a run.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    concurrency: usize,
}

/// A failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
    usage: Option<&'static str>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
            usage: None,
        }
    }

    fn environment(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_ENVIRONMENT,
            message: message.into(),
            usage: None,
        }
    }

    fn with_usage(mut self, subcommand: &'static str) -> Self {
        self.usage = Some(subcommand);
        self
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Replay { .. } => Self {
                code: EXIT_NOT_FIXED,
                message: e.to_string(),
                usage: None,
            },
            BenchError::EmptyDataset | BenchError::Report(_) => Self::usage(e.to_string()),
            BenchError::Io { .. } => Self::environment(e.to_string()),
        }
    }
}

type CliResult = Result<i32, Failure>;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Debug(args) => debug(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Baseline(args) => baseline_cmd(args),
        Command::Report(args) => report_cmd(args),
        Command::Replay(args) => replay_cmd(args),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            if let Some(name) = failure.usage {
                let mut command = Cli::command();
                if let Some(sub) = command.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            failure.code
        }
    }
}

fn read_file(path: &Path, what: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_catalog(dir: Option<&Path>) -> Result<Catalog, Failure> {
    let Some(dir) = dir else {
        return Ok(Catalog::builtin());
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::usage(format!("cannot read prompts directory {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let sources = paths
        .iter()
        .map(|p| read_file(p, "prompt template"))
        .collect::<Result<Vec<_>, _>>()?;
    Catalog::with_overrides(sources.iter().map(String::as_str))
        .map_err(|e| Failure::usage(format!("prompt templates: {e}")))
}

fn model_config(args: &ModelArgs) -> ModelConfig {
    let mut config = match args.backend {
        BackendChoice::Http => ModelConfig::default(),
        BackendChoice::Scripted => ModelConfig::scripted(),
    };
    if let Some(model) = &args.model {
        config.model_name = model.clone();
    }
    if let Some(endpoint) = &args.endpoint {
        config.endpoint_url = endpoint.clone();
    }
    if let Some(t) = args.temperature {
        config.temperature = t;
    }
    if let Some(m) = args.max_tokens {
        config.max_tokens = m;
    }
    if let Some(env) = &args.api_key_env {
        config.api_key_env = env.clone();
    }
    config
}

fn orchestrator_config(model: &ModelArgs, session: &SessionArgs) -> Result<OrchestratorConfig, Failure> {
    let mut limits = ResourceLimits::default();
    if let Some(t) = session.time_limit_ms {
        limits.time_limit_ms = t;
    }
    if let Some(m) = session.memory_limit_mb {
        limits.memory_limit_mb = m;
    }
    let config = OrchestratorConfig {
        max_iterations: session.max_iterations,
        max_agents: session.max_agents,
        validation_mode: match session.validation {
            ValidationChoice::Auto => None,
            ValidationChoice::Tests => Some(ValidationMode::TestGated),
            ValidationChoice::Judge => Some(ValidationMode::LlmJudged),
        },
        model: model_config(model),
        limits,
    };
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(config)
}

/// Backend factory for the chosen backend kind.
#[derive(Clone)]
enum Backends {
    Http { config: ModelConfig, key: String },
    Scripted(ScriptBook),
    ScriptedBaseline(ScriptBook),
}

impl Backends {
    /// The same backends, for one-shot baseline sessions.
    fn for_baseline(&self) -> Self {
        match self {
            Backends::Scripted(book) => Backends::ScriptedBaseline(book.clone()),
            other => other.clone(),
        }
    }
}

impl BackendFactory for Backends {
    fn backend(&self, instance: &BugInstance) -> Result<Box<dyn ChatBackend>, String> {
        match self {
            Backends::Http { config, key } => {
                Ok(Box::new(HttpChatBackend::new(config, Some(key.clone()))))
            }
            Backends::Scripted(book) => Ok(Box::new(book.backend_for(&instance.id)?)),
            Backends::ScriptedBaseline(book) => Ok(Box::new(book.baseline_backend_for(&instance.id)?)),
        }
    }
}

fn backends(args: &ModelArgs, config: &ModelConfig) -> Result<Backends, Failure> {
    match config.backend_kind {
        BackendKind::Scripted => {
            let path = args
                .script
                .as_ref()
                .ok_or_else(|| Failure::usage("--backend scripted needs --script <file>"))?;
            Ok(Backends::Scripted(ScriptBook::load(path).map_err(Failure::usage)?))
        }
        BackendKind::HttpChat => {
            let key = std::env::var(&config.api_key_env)
                .ok()
                .filter(|k| !k.is_empty())
                .ok_or_else(|| {
                    Failure::environment(format!(
                        "API key variable {} is not set",
                        config.api_key_env
                    ))
                })?;
            Ok(Backends::Http {
                config: config.clone(),
                key,
            })
        }
    }
}

enum AnyExecutor {
    Process(ProcessExecutor),
    Scripted(ScriptedExecutor),
}

impl AnyExecutor {
    fn as_dyn(&self) -> &(dyn Executor + Sync) {
        match self {
            AnyExecutor::Process(e) => e,
            AnyExecutor::Scripted(e) => e,
        }
    }
}

/// The sandbox, if one is configured. `needed` turns a missing process
/// runner into an environment error.
fn executor(args: &SessionArgs, needed: bool) -> Result<Option<AnyExecutor>, Failure> {
    match args.executor {
        ExecutorChoice::Scripted => {
            let path = args
                .executor_rules
                .as_ref()
                .ok_or_else(|| Failure::usage("--executor scripted needs --executor-rules <file>"))?;
            let rules: ScriptedExecutor = serde_json::from_str(&read_file(path, "executor rules")?)
                .map_err(|e| Failure::usage(format!("executor rules {}: {e}", path.display())))?;
            Ok(Some(AnyExecutor::Scripted(rules)))
        }
        ExecutorChoice::Process => match ProcessExecutor::from_env() {
            Some(e) => Ok(Some(AnyExecutor::Process(e))),
            None if needed => Err(Failure::environment(format!(
                "no sandbox runner: set {EXECUTOR_CMD_ENV} to the runner command line"
            ))),
            None => Ok(None),
        },
    }
}

fn needs_sandbox(config: &OrchestratorConfig, instances: &[BugInstance], baseline: bool) -> bool {
    instances.iter().any(|i| {
        !i.tests.is_empty() && (baseline || config.validation_mode != Some(ValidationMode::LlmJudged))
    })
}

fn session_failure(e: SessionError) -> Failure {
    match e {
        SessionError::SandboxUnavailable => Failure::environment(e.to_string()),
        SessionError::Replay(_) => Failure {
            code: EXIT_NOT_FIXED,
            message: e.to_string(),
            usage: None,
        },
        _ => Failure::usage(e.to_string()),
    }
}

fn print_outcome(outcome: &SessionOutcome) {
    println!("verdict: {}", if outcome.fixed { "fixed" } else { "not fixed" });
    println!(
        "iterations: {}  agents: {}  llm_calls: {}",
        outcome.iterations.len(),
        outcome.agents_created_total,
        outcome.llm_calls
    );
    if let Some(last) = outcome.iterations.last() {
        println!("rationale: {}", last.verdict.rationale);
    }
    if let Some(diagnostic) = &outcome.diagnostic {
        println!("diagnostic: {diagnostic}");
    }
    let candidate = outcome
        .iterations
        .iter()
        .rev()
        .find_map(|r| r.verdict.final_code.as_deref());
    if let Some(code) = candidate {
        println!("--- final code ---");
        println!("{}", code.trim_end());
    }
}

fn debug(args: DebugArgs) -> CliResult {
    let config = orchestrator_config(&args.model, &args.session)?;
    let catalog = load_catalog(args.session.prompts_dir.as_deref())?;
    let code = read_file(&args.code, "program")?;
    let tests: Vec<TestCase> = match &args.tests {
        Some(path) => serde_json::from_str(&read_file(path, "tests")?)
            .map_err(|e| Failure::usage(format!("tests {}: {e}", path.display())))?,
        None => Vec::new(),
    };
    let id = args
        .code
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "program".into());
    let instance = BugInstance {
        title: args.title.clone().unwrap_or_else(|| id.clone()),
        description: args
            .description
            .clone()
            .unwrap_or_else(|| "Fix the bugs in this program so that it behaves as intended.".into()),
        id,
        buggy_code: code,
        language: args.language.clone(),
        category: args.category,
        complexity: ComplexityLevel::Unknown,
        tests,
        reference_solution: None,
    };
    instance.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let mode = config.mode_for(&instance).map_err(|e| Failure::usage(e.to_string()))?;

    let backends = backends(&args.model, &config.model)?;
    let executor = executor(&args.session, mode == ValidationMode::TestGated)?;
    let mut backend = backends.backend(&instance).map_err(Failure::usage)?;

    let transcript = args.transcript.clone().unwrap_or_else(|| {
        let mut name = args.code.clone().into_os_string();
        name.push(".transcript.jsonl");
        PathBuf::from(name)
    });
    let mut sink = JsonlSink::create(&transcript)
        .map_err(|e| Failure::environment(format!("{}: {e}", transcript.display())))?;
    let clock = SystemClock::new();
    let orchestrator = Orchestrator::new(
        &config,
        &catalog,
        executor.as_ref().map(|e| e.as_dyn() as &dyn Executor),
        &clock,
    );
    let outcome = orchestrator
        .run_session(&instance, &mut *backend, &mut sink)
        .map_err(session_failure)?;
    sink.finish()
        .map_err(|e| Failure::environment(format!("{}: {e}", transcript.display())))?;
    print_outcome(&outcome);
    eprintln!("transcript: {}", transcript.display());
    Ok(if outcome.fixed { EXIT_OK } else { EXIT_NOT_FIXED })
}

fn non_empty_set<T: Ord + Copy>(values: &[T]) -> Option<BTreeSet<T>> {
    (!values.is_empty()).then(|| values.iter().copied().collect())
}

fn dataset_filter(args: &DatasetArgs) -> DatasetFilter {
    DatasetFilter {
        categories: non_empty_set(&args.categories),
        complexities: non_empty_set(&args.complexities),
        limit: args.limit,
        seed: args.seed,
    }
}

fn load_instances(args: &DatasetArgs, subcommand: &'static str) -> Result<(DatasetFilter, Vec<BugInstance>), Failure> {
    let filter = dataset_filter(args);
    let dataset = load_dataset(&args.dataset, &filter).map_err(|e| {
        let failure = Failure::usage(e.to_string());
        match e {
            DatasetError::Io { .. } | DatasetError::InvalidFilter => failure.with_usage(subcommand),
            _ => failure,
        }
    })?;
    for skipped in &dataset.skipped {
        eprintln!("warning: skipped {skipped}");
    }
    if dataset.instances.is_empty() {
        return Err(Failure::usage("no instances match the filter"));
    }
    Ok((filter, dataset.instances))
}

/// Refuse to resume into a directory that holds a different run.
fn check_resume(out: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    if !out.join(bench::MANIFEST_FILE).exists() {
        return Ok(());
    }
    match RunManifest::read(out) {
        Ok(existing) if existing == *manifest => Ok(()),
        _ => Err(Failure::usage(format!(
            "{} holds a different run; choose another --out",
            out.display()
        ))),
    }
}

fn bench_cmd(args: BenchArgs) -> CliResult {
    let (filter, instances) = load_instances(&args.data, "bench")?;
    let config = orchestrator_config(&args.model, &args.session)?;
    let catalog = load_catalog(args.session.prompts_dir.as_deref())?;
    let backends = backends(&args.model, &config.model)?;
    let executor = executor(&args.session, needs_sandbox(&config, &instances, args.baseline))?;
    let manifest = RunManifest {
        instance_ids: instances.iter().map(|i| i.id.clone()).collect(),
        adaptive: true,
        baseline: args.baseline,
        filter,
        config: config.clone(),
        template_versions: catalog.versions(),
    };
    check_resume(&args.out, &manifest)?;
    manifest.write(&args.out)?;

    let clock = SystemClock::new();
    let harness = Harness {
        config: &config,
        catalog: &catalog,
        executor: executor.as_ref().map(AnyExecutor::as_dyn),
        clock: &clock,
        backends: &backends,
        concurrency: args.data.concurrency,
    };
    let adaptive = bench::run_benchmark(&harness, &instances, &args.out)?;
    let baseline_backends = backends.for_baseline();
    let baseline = if args.baseline {
        let harness = Harness {
            backends: &baseline_backends,
            ..harness
        };
        Some(bench::run_baseline(&harness, &instances, &args.out)?)
    } else {
        None
    };
    let summary = bench::write_summary(&args.out, &adaptive, baseline.as_deref(), &manifest.template_versions)?;
    let label = args.out.display().to_string();
    let table = report::render_report(&[ReportRun { label, summary }], ReportFormat::Markdown)
        .map_err(|e| Failure::usage(e.to_string()))?;
    print!("{table}");
    Ok(EXIT_OK)
}

fn baseline_cmd(args: BaselineArgs) -> CliResult {
    let (filter, instances) = load_instances(&args.data, "baseline")?;
    let config = orchestrator_config(&args.model, &args.session)?;
    let catalog = load_catalog(args.session.prompts_dir.as_deref())?;
    let backends = backends(&args.model, &config.model)?.for_baseline();
    let executor = executor(&args.session, needs_sandbox(&config, &instances, true))?;
    let manifest = RunManifest {
        instance_ids: instances.iter().map(|i| i.id.clone()).collect(),
        adaptive: false,
        baseline: true,
        filter,
        config: config.clone(),
        template_versions: catalog.versions(),
    };
    check_resume(&args.out, &manifest)?;
    manifest.write(&args.out)?;
    let clock = SystemClock::new();
    let harness = Harness {
        config: &config,
        catalog: &catalog,
        executor: executor.as_ref().map(AnyExecutor::as_dyn),
        clock: &clock,
        backends: &backends,
        concurrency: args.data.concurrency,
    };
    let outcomes = bench::run_baseline(&harness, &instances, &args.out)?;
    let fixed = outcomes.iter().filter(|o| o.fixed).count();
    let calls: u64 = outcomes.iter().map(|o| o.llm_calls).sum();
    println!(
        "baseline fixed {fixed} of {} ({}%), llm_calls {calls}",
        outcomes.len(),
        fixed as f64 * 100.0 / outcomes.len() as f64
    );
    Ok(EXIT_OK)
}

fn default_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match (stem.as_deref(), path.parent().and_then(Path::file_name)) {
        (Some("outcomes"), Some(dir)) => dir.to_string_lossy().into_owned(),
        (Some(stem), _) => stem.to_string(),
        (None, _) => path.display().to_string(),
    }
}

fn report_cmd(args: ReportArgs) -> CliResult {
    let n = args.outcomes.len();
    if !args.baseline_outcomes.is_empty() && args.baseline_outcomes.len() != n {
        return Err(Failure::usage("give one --baseline-outcomes per --outcomes, or none").with_usage("report"));
    }
    if !args.label.is_empty() && args.label.len() != n {
        return Err(Failure::usage("give one --label per --outcomes, or none").with_usage("report"));
    }
    let mut runs = Vec::with_capacity(n);
    for (i, path) in args.outcomes.iter().enumerate() {
        let adaptive: Vec<SessionOutcome> =
            report::read_jsonl(path).map_err(|e| Failure::usage(e.to_string()))?;
        let baseline = match args.baseline_outcomes.get(i) {
            Some(p) => Some(report::read_jsonl(p).map_err(|e| Failure::usage(e.to_string()))?),
            None => None,
        };
        let label = args.label.get(i).cloned().unwrap_or_else(|| default_label(path));
        runs.push(
            ReportRun::new(label, &adaptive, baseline.as_deref())
                .map_err(|e| Failure::usage(e.to_string()))?,
        );
    }
    let rendered = report::render_report(&runs, args.format).map_err(|e| Failure::usage(e.to_string()))?;
    print!("{rendered}");
    if let Some(out) = &args.out {
        let ext = match args.format {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        };
        let write = |r: Result<(), report::ReportError>| r.map_err(|e| Failure::environment(e.to_string()));
        write(report::write_file(&out.join(format!("report.{ext}")), &rendered))?;
        for run in &runs {
            let dir = if runs.len() == 1 {
                out.join(bench::FIGURES_DIR)
            } else {
                out.join(bench::FIGURES_DIR).join(&run.label)
            };
            write(report::write_figures(&dir, &run.summary))?;
        }
    }
    Ok(EXIT_OK)
}

fn replay_cmd(args: ReplayArgs) -> CliResult {
    let catalog = load_catalog(args.prompts_dir.as_deref())?;
    let clock = SystemClock::new();
    if args.transcript.is_dir() {
        let out = args.out.clone().unwrap_or_else(|| args.transcript.join("replay"));
        let replayed = bench::replay_run(&args.transcript, &out, &catalog, &clock, args.concurrency)?;
        let count = replayed.manifest.instance_ids.len();
        println!("replayed {count} instances into {}", out.display());
        if let Some(summary) = replayed.summary {
            let table = report::render_report(
                &[ReportRun {
                    label: out.display().to_string(),
                    summary,
                }],
                ReportFormat::Markdown,
            )
            .map_err(|e| Failure::usage(e.to_string()))?;
            print!("{table}");
        }
        return Ok(EXIT_OK);
    }

    let recorded = load_recording(&args.transcript).map_err(|e| match e {
        ReplayError::Transcript(_) => Failure::usage(e.to_string()),
        _ => Failure {
            code: EXIT_NOT_FIXED,
            message: e.to_string(),
            usage: None,
        },
    })?;
    let result = match &args.out {
        Some(path) => {
            let mut sink = JsonlSink::create(path)
                .map_err(|e| Failure::environment(format!("{}: {e}", path.display())))?;
            let result = replay_session(&recorded, &catalog, &clock, &mut sink);
            sink.finish()
                .map_err(|e| Failure::environment(format!("{}: {e}", path.display())))?;
            result
        }
        None => replay_session(
            &recorded,
            &catalog,
            &clock,
            &mut adaptive_debug_core::transcript::NullSink,
        ),
    };
    match result {
        Ok(Replayed::Adaptive(outcome)) => print_outcome(&outcome),
        Ok(Replayed::Baseline(outcome)) => {
            println!("verdict: {}", if outcome.fixed { "fixed" } else { "not fixed" });
            println!("llm_calls: {}", outcome.llm_calls);
        }
        Err(e) => {
            return Err(Failure {
                code: EXIT_NOT_FIXED,
                message: e.to_string(),
                usage: None,
            })
        }
    }
    Ok(EXIT_OK)
}
