//! Benchmark harness: adaptive sessions and one-shot baselines over a
//! dataset, with incremental, resume-safe persistence.
//!
//! Output directory layout:
//!
//! ```text
//! run.json                      manifest: instance order, config, templates
//! outcomes.jsonl                one SessionOutcome per line, dataset order
//! baseline_outcomes.jsonl       one BaselineOutcome per line (with --baseline)
//! summary.json                  MetricsSummary + template versions
//! figures/*.csv                 agent and iteration counts by complexity
//! transcripts/<id>.jsonl        adaptive session transcripts
//! transcripts/baseline/<id>.jsonl
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use adaptive_debug_core::baseline::{run_one_shot, BaselineOutcome};
use adaptive_debug_core::llm::ChatBackend;
use adaptive_debug_core::metrics::MetricsSummary;
use adaptive_debug_core::orchestrator::Clock;
use adaptive_debug_core::sandbox::Executor;
use adaptive_debug_core::transcript::EventSink;
use adaptive_debug_core::{
    sha256_hex, BugInstance, Catalog, Orchestrator, OrchestratorConfig, SessionError, SessionOutcome,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetFilter;
use crate::report::{self, ReportError};
use crate::transcript_io::JsonlSink;

pub const MANIFEST_FILE: &str = "run.json";
pub const OUTCOMES_FILE: &str = "outcomes.jsonl";
pub const BASELINE_OUTCOMES_FILE: &str = "baseline_outcomes.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FIGURES_DIR: &str = "figures";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const BASELINE_TRANSCRIPTS_DIR: &str = "transcripts/baseline";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("instance {instance_id}: {reason}")]
    Replay { instance_id: String, reason: String },
    #[error(transparent)]
    Report(#[from] ReportError),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Creates one model backend per session.
pub trait BackendFactory: Sync {
    fn backend(&self, instance: &BugInstance) -> Result<Box<dyn ChatBackend>, String>;
}

impl<F> BackendFactory for F
where
    F: Fn(&BugInstance) -> Result<Box<dyn ChatBackend>, String> + Sync,
{
    fn backend(&self, instance: &BugInstance) -> Result<Box<dyn ChatBackend>, String> {
        self(instance)
    }
}

/// Shared, read-only collaborators for a benchmark run.
#[derive(Clone, Copy)]
pub struct Harness<'a> {
    pub config: &'a OrchestratorConfig,
    pub catalog: &'a Catalog,
    pub executor: Option<&'a (dyn Executor + Sync)>,
    pub clock: &'a (dyn Clock + Sync),
    pub backends: &'a dyn BackendFactory,
    pub concurrency: usize,
}

/// Anything persisted one line per instance.
pub trait InstanceOutcome: Serialize + DeserializeOwned + Send {
    fn instance_id(&self) -> &str;
}

impl InstanceOutcome for SessionOutcome {
    fn instance_id(&self) -> &str {
        &self.instance_id
    }
}

impl InstanceOutcome for BaselineOutcome {
    fn instance_id(&self) -> &str {
        &self.instance_id
    }
}

/// File name for an instance id: kept verbatim when already safe, else
/// sanitized and suffixed with a digest to stay unique.
pub fn transcript_file_name(instance_id: &str) -> String {
    let safe: String = instance_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if safe == instance_id && !safe.starts_with('.') {
        format!("{safe}.jsonl")
    } else {
        format!("{safe}-{}.jsonl", &sha256_hex(instance_id.as_bytes())[..8])
    }
}

/// Outcomes already on disk for ids in `dataset`. Unparsable lines (a run
/// killed mid-write) are ignored.
fn completed<T: InstanceOutcome>(path: &Path, dataset: &[BugInstance]) -> HashMap<String, T> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return HashMap::new();
    };
    let wanted: std::collections::HashSet<&str> = dataset.iter().map(|i| i.id.as_str()).collect();
    text.lines()
        .filter_map(|l| serde_json::from_str::<T>(l).ok())
        .filter(|o| wanted.contains(o.instance_id()))
        .map(|o| (o.instance_id().to_string(), o))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[&T]) -> Result<(), BenchError> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item).expect("outcome serializes"));
        text.push('\n');
    }
    std::fs::write(&tmp, text).map_err(io_error(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_error(path))
}

fn append_line<T: Serialize>(file: &mut File, path: &Path, item: &T) -> Result<(), BenchError> {
    let mut line = serde_json::to_string(item).expect("outcome serializes");
    line.push('\n');
    file.write_all(line.as_bytes())
        .and_then(|_| file.flush())
        .map_err(io_error(path))
}

/// Run `job` for every instance not already recorded in `outcomes_path`,
/// `concurrency` at a time. Each result is appended as soon as it arrives;
/// the file is rewritten in dataset order at the end.
pub fn run_pool<T, J>(
    dataset: &[BugInstance],
    concurrency: usize,
    outcomes_path: &Path,
    transcripts_dir: &Path,
    job: J,
) -> Result<Vec<T>, BenchError>
where
    T: InstanceOutcome,
    J: Fn(&BugInstance, &mut dyn EventSink) -> Result<T, BenchError> + Sync,
{
    if dataset.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    std::fs::create_dir_all(transcripts_dir).map_err(io_error(transcripts_dir))?;
    let mut done: HashMap<String, T> = completed(outcomes_path, dataset);

    // Drop any torn trailing line before appending.
    let kept: Vec<&T> = dataset.iter().filter_map(|i| done.get(&i.id)).collect();
    write_jsonl(outcomes_path, &kept)?;
    let mut file = OpenOptions::new()
        .append(true)
        .open(outcomes_path)
        .map_err(io_error(outcomes_path))?;

    let pending: Vec<&BugInstance> = dataset.iter().filter(|i| !done.contains_key(&i.id)).collect();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = concurrency.clamp(1, pending.len().max(1));
    let mut first_error = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Result<T, BenchError>>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, pending, job) = (&next, &stop, &pending, &job);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(instance) = pending.get(idx) else {
                    break;
                };
                let path = transcripts_dir.join(transcript_file_name(&instance.id));
                let result = JsonlSink::create(&path)
                    .map_err(io_error(&path))
                    .and_then(|mut sink| {
                        let outcome = job(instance, &mut sink)?;
                        sink.finish().map_err(io_error(&path))?;
                        Ok(outcome)
                    });
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for result in rx {
            let appended = result.and_then(|outcome| {
                append_line(&mut file, outcomes_path, &outcome)?;
                Ok(outcome)
            });
            match appended {
                Ok(outcome) => {
                    done.insert(outcome.instance_id().to_string(), outcome);
                }
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    first_error.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    let ordered: Vec<T> = dataset
        .iter()
        .map(|i| done.remove(&i.id).expect("every instance has an outcome"))
        .collect();
    write_jsonl(outcomes_path, &ordered.iter().collect::<Vec<_>>())?;
    Ok(ordered)
}

/// One adaptive session; failures other than replay divergence become
/// `fixed = false` outcomes with a diagnostic.
pub fn adaptive_job(
    harness: &Harness<'_>,
    instance: &BugInstance,
    sink: &mut dyn EventSink,
) -> Result<SessionOutcome, BenchError> {
    let started = harness.clock.now_ms();
    let mut backend = match harness.backends.backend(instance) {
        Ok(b) => b,
        Err(reason) => {
            return Ok(SessionOutcome::aborted(instance, format!("no model backend: {reason}"), 0, 0))
        }
    };
    let executor = harness.executor.map(|e| e as &dyn Executor);
    let orchestrator = Orchestrator::new(harness.config, harness.catalog, executor, harness.clock);
    match orchestrator.run_session(instance, &mut *backend, sink) {
        Ok(outcome) => Ok(outcome),
        Err(SessionError::Replay(reason)) => Err(BenchError::Replay {
            instance_id: instance.id.clone(),
            reason,
        }),
        Err(e) => Ok(SessionOutcome::aborted(
            instance,
            e,
            0,
            harness.clock.now_ms().saturating_sub(started),
        )),
    }
}

pub fn baseline_job(
    harness: &Harness<'_>,
    instance: &BugInstance,
    sink: &mut dyn EventSink,
) -> Result<BaselineOutcome, BenchError> {
    let aborted = |diagnostic: String| BaselineOutcome {
        instance_id: instance.id.clone(),
        complexity: instance.complexity,
        fixed: false,
        llm_calls: 0,
        diagnostic: Some(diagnostic),
    };
    let mut backend = match harness.backends.backend(instance) {
        Ok(b) => b,
        Err(reason) => return Ok(aborted(format!("no model backend: {reason}"))),
    };
    let executor = harness.executor.map(|e| e as &dyn Executor);
    match run_one_shot(
        instance,
        harness.config,
        harness.catalog,
        executor,
        harness.clock,
        &mut *backend,
        sink,
    ) {
        Ok(outcome) => Ok(outcome),
        Err(SessionError::Replay(reason)) => Err(BenchError::Replay {
            instance_id: instance.id.clone(),
            reason,
        }),
        Err(e) => Ok(aborted(e.to_string())),
    }
}

pub fn run_benchmark(
    harness: &Harness<'_>,
    dataset: &[BugInstance],
    out: &Path,
) -> Result<Vec<SessionOutcome>, BenchError> {
    run_pool(
        dataset,
        harness.concurrency,
        &out.join(OUTCOMES_FILE),
        &out.join(TRANSCRIPTS_DIR),
        |instance, sink| adaptive_job(harness, instance, sink),
    )
}

pub fn run_baseline(
    harness: &Harness<'_>,
    dataset: &[BugInstance],
    out: &Path,
) -> Result<Vec<BaselineOutcome>, BenchError> {
    run_pool(
        dataset,
        harness.concurrency,
        &out.join(BASELINE_OUTCOMES_FILE),
        &out.join(BASELINE_TRANSCRIPTS_DIR),
        |instance, sink| baseline_job(harness, instance, sink),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub instance_ids: Vec<String>,
    pub adaptive: bool,
    pub baseline: bool,
    pub filter: DatasetFilter,
    pub config: OrchestratorConfig,
    pub template_versions: BTreeMap<String, u32>,
}

impl RunManifest {
    pub fn write(&self, out: &Path) -> Result<(), BenchError> {
        report::write_file(&out.join(MANIFEST_FILE), &report::to_pretty_json(self))?;
        Ok(())
    }

    pub fn read(out: &Path) -> Result<Self, BenchError> {
        let path = out.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_error(&path))?;
        serde_json::from_str(&text).map_err(|e| {
            BenchError::Report(ReportError::Malformed {
                path,
                line: 1,
                reason: e.to_string(),
            })
        })
    }
}

/// Write `summary.json` and the figure series.
pub fn write_summary(
    out: &Path,
    adaptive: &[SessionOutcome],
    baseline: Option<&[BaselineOutcome]>,
    template_versions: &BTreeMap<String, u32>,
) -> Result<MetricsSummary, BenchError> {
    let summary = adaptive_debug_core::metrics::compute_metrics(adaptive, baseline)
        .map_err(ReportError::from)?;
    let doc = report::summary_document(&summary, template_versions);
    report::write_file(&out.join(SUMMARY_FILE), &report::to_pretty_json(&doc))?;
    report::write_figures(&out.join(FIGURES_DIR), &summary)?;
    Ok(summary)
}

/// Outcomes of replaying every session recorded in a benchmark directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayedRun {
    pub manifest: RunManifest,
    pub adaptive: Option<Vec<SessionOutcome>>,
    pub baseline: Option<Vec<BaselineOutcome>>,
    pub summary: Option<MetricsSummary>,
}

/// Replay the run recorded in `source` into `out`, producing the same
/// layout (outcomes, summary, figures, fresh transcripts).
pub fn replay_run(
    source: &Path,
    out: &Path,
    catalog: &Catalog,
    clock: &(dyn Clock + Sync),
    concurrency: usize,
) -> Result<ReplayedRun, BenchError> {
    use crate::replay::{load_recording, replay_session, RecordedSession, Replayed};

    let manifest = RunManifest::read(source)?;
    std::fs::create_dir_all(out).map_err(io_error(out))?;
    let same_dir = std::fs::canonicalize(source).ok() == std::fs::canonicalize(out).ok();
    if same_dir {
        return Err(BenchError::Io {
            path: out.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "replay output directory must differ from the recorded run",
            ),
        });
    }
    for stale in [OUTCOMES_FILE, BASELINE_OUTCOMES_FILE, SUMMARY_FILE] {
        let path = out.join(stale);
        if path.exists() {
            std::fs::remove_file(&path).map_err(io_error(&path))?;
        }
    }

    let load = |dir: &str| -> Result<(Vec<BugInstance>, HashMap<String, RecordedSession>), BenchError> {
        let mut instances = Vec::new();
        let mut sessions = HashMap::new();
        for id in &manifest.instance_ids {
            let path = source.join(dir).join(transcript_file_name(id));
            let recorded = load_recording(&path).map_err(|e| BenchError::Replay {
                instance_id: id.clone(),
                reason: e.to_string(),
            })?;
            instances.push(recorded.instance.clone());
            sessions.insert(id.clone(), recorded);
        }
        Ok((instances, sessions))
    };
    let replay_one = |sessions: &HashMap<String, RecordedSession>,
                      instance: &BugInstance,
                      sink: &mut dyn EventSink|
     -> Result<Replayed, BenchError> {
        replay_session(&sessions[&instance.id], catalog, clock, sink).map_err(|e| BenchError::Replay {
            instance_id: instance.id.clone(),
            reason: e.to_string(),
        })
    };
    let wrong_kind = |instance: &BugInstance| BenchError::Replay {
        instance_id: instance.id.clone(),
        reason: "transcript records a different session kind".into(),
    };

    let adaptive = if manifest.adaptive {
        let (instances, sessions) = load(TRANSCRIPTS_DIR)?;
        Some(run_pool(
            &instances,
            concurrency,
            &out.join(OUTCOMES_FILE),
            &out.join(TRANSCRIPTS_DIR),
            |instance, sink| match replay_one(&sessions, instance, sink)? {
                Replayed::Adaptive(o) => Ok(o),
                Replayed::Baseline(_) => Err(wrong_kind(instance)),
            },
        )?)
    } else {
        None
    };
    let baseline = if manifest.baseline {
        let (instances, sessions) = load(BASELINE_TRANSCRIPTS_DIR)?;
        Some(run_pool(
            &instances,
            concurrency,
            &out.join(BASELINE_OUTCOMES_FILE),
            &out.join(BASELINE_TRANSCRIPTS_DIR),
            |instance, sink| match replay_one(&sessions, instance, sink)? {
                Replayed::Baseline(o) => Ok(o),
                Replayed::Adaptive(_) => Err(wrong_kind(instance)),
            },
        )?)
    } else {
        None
    };

    manifest.write(out)?;
    let summary = match &adaptive {
        Some(adaptive) => Some(write_summary(
            out,
            adaptive,
            baseline.as_deref(),
            &manifest.template_versions,
        )?),
        None => None,
    };
    Ok(ReplayedRun {
        manifest,
        adaptive,
        baseline,
        summary,
    })
}
