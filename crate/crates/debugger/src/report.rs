//! Summaries, plot-ready figure series and multi-run comparison tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adaptive_debug_core::metrics::{compute_metrics, mean_gain, Histogram, MetricsError, MetricsSummary};
use adaptive_debug_core::{baseline::BaselineOutcome, SessionOutcome};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub const AGENTS_FIGURE: &str = "agents_by_complexity.csv";
pub const ITERATIONS_FIGURE: &str = "iterations_by_complexity.csv";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("nothing to report: no outcomes")]
    Empty,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

/// One model's run: adaptive outcomes plus (optionally) its baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRun {
    pub label: String,
    pub summary: MetricsSummary,
}

impl ReportRun {
    pub fn new(
        label: impl Into<String>,
        adaptive: &[SessionOutcome],
        baseline: Option<&[BaselineOutcome]>,
    ) -> Result<Self, ReportError> {
        if adaptive.is_empty() {
            return Err(ReportError::Empty);
        }
        Ok(Self {
            label: label.into(),
            summary: compute_metrics(adaptive, baseline)?,
        })
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read a JSONL file of outcomes. Blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReportError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_error(parent))?;
    }
    std::fs::write(path, contents).map_err(io_error(path))
}

/// `summary.json`: the metrics plus the prompt template versions used.
pub fn summary_document(summary: &MetricsSummary, template_versions: &BTreeMap<String, u32>) -> Value {
    let mut doc = serde_json::to_value(summary).expect("summary serializes");
    doc["template_versions"] = json!(template_versions);
    doc
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// CSV with columns complexity,value,instance_count.
pub fn figure_csv(histogram: &Histogram) -> String {
    let mut out = String::from("complexity,value,instance_count\n");
    for (complexity, buckets) in histogram {
        for (value, count) in buckets {
            let _ = writeln!(out, "{},{value},{count}", complexity.as_str());
        }
    }
    out
}

pub fn write_figures(dir: &Path, summary: &MetricsSummary) -> Result<(), ReportError> {
    write_file(&dir.join(AGENTS_FIGURE), &figure_csv(&summary.agents_histogram_by_complexity))?;
    write_file(
        &dir.join(ITERATIONS_FIGURE),
        &figure_csv(&summary.iterations_histogram_by_complexity),
    )
}

fn cell<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

struct Row {
    label: String,
    cells: [String; 6],
}

fn rows(runs: &[ReportRun]) -> Vec<Row> {
    runs.iter()
        .map(|run| {
            let s = &run.summary;
            Row {
                label: run.label.clone(),
                cells: [
                    s.total.to_string(),
                    cell(s.fixed_baseline),
                    cell(s.fix_percent_baseline()),
                    s.fixed_adaptive.to_string(),
                    s.fix_percent_adaptive().to_string(),
                    cell(s.gain_points),
                ],
            }
        })
        .collect()
}

const COLUMNS: [&str; 7] = [
    "run",
    "total",
    "baseline_fixed",
    "baseline_percent",
    "adaptive_fixed",
    "adaptive_percent",
    "gain_points",
];

pub fn render_report(runs: &[ReportRun], format: ReportFormat) -> Result<String, ReportError> {
    if runs.is_empty() {
        return Err(ReportError::Empty);
    }
    let summaries: Vec<MetricsSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let mean = mean_gain(&summaries);
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            let runs: Vec<Value> = runs
                .iter()
                .map(|r| {
                    let mut v = serde_json::to_value(&r.summary).expect("summary serializes");
                    v["label"] = json!(r.label);
                    v
                })
                .collect();
            out = to_pretty_json(&json!({ "runs": runs, "mean_gain_points": mean }));
        }
        ReportFormat::Csv => {
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for row in rows(runs) {
                let _ = writeln!(out, "{},{}", row.label, row.cells.join(","));
            }
            if let Some(mean) = mean {
                let _ = writeln!(out, "mean,,,,,,{mean}");
            }
        }
        ReportFormat::Markdown => {
            out.push_str("| Run | Total | Baseline fixed | Baseline % | Adaptive fixed | Adaptive % | Gain (points) |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for row in rows(runs) {
                let _ = writeln!(out, "| {} | {} |", row.label, row.cells.join(" | "));
            }
            if let Some(mean) = mean {
                let _ = write!(out, "\nMean gain: {mean} points\n");
            }
        }
    }
    Ok(out)
}
