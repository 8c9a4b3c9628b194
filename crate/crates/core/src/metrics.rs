//! Fix rates, gains and resource histograms over a benchmark run.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineOutcome;
use crate::types::{ComplexityLevel, SessionOutcome};

/// complexity → bucket value → number of instances.
pub type Histogram = BTreeMap<ComplexityLevel, BTreeMap<u32, u32>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub total: u32,
    pub fixed_adaptive: u32,
    pub fixed_baseline: Option<u32>,
    pub fix_rate_adaptive: f64,
    pub fix_rate_baseline: Option<f64>,
    /// Percentage points: (fixed_adaptive - fixed_baseline) / total * 100.
    pub gain_points: Option<f64>,
    pub agents_histogram_by_complexity: Histogram,
    pub iterations_histogram_by_complexity: Histogram,
    pub mean_llm_calls: f64,
}

impl MetricsSummary {
    pub fn fix_percent_adaptive(&self) -> f64 {
        percent(self.fixed_adaptive, self.total)
    }

    pub fn fix_percent_baseline(&self) -> Option<f64> {
        self.fixed_baseline.map(|b| percent(b, self.total))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no outcomes to summarize")]
    Empty,
    #[error("instance {0:?} appears more than once")]
    DuplicateId(String),
    #[error("adaptive and baseline runs cover different instances (only adaptive: {only_adaptive:?}, only baseline: {only_baseline:?})")]
    IdMismatch {
        only_adaptive: Vec<String>,
        only_baseline: Vec<String>,
    },
}

/// `part` as a percentage of `total`, computed so integer inputs stay exact.
pub fn percent(part: u32, total: u32) -> f64 {
    f64::from(part) * 100.0 / f64::from(total)
}

fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<BTreeSet<&'a str>, MetricsError> {
    let mut set = BTreeSet::new();
    for id in ids {
        if !set.insert(id) {
            return Err(MetricsError::DuplicateId(id.into()));
        }
    }
    Ok(set)
}

pub fn compute_metrics(
    adaptive: &[SessionOutcome],
    baseline: Option<&[BaselineOutcome]>,
) -> Result<MetricsSummary, MetricsError> {
    if adaptive.is_empty() {
        return Err(MetricsError::Empty);
    }
    let adaptive_ids = unique_ids(adaptive.iter().map(|o| o.instance_id.as_str()))?;
    if let Some(baseline) = baseline {
        let baseline_ids = unique_ids(baseline.iter().map(|o| o.instance_id.as_str()))?;
        if adaptive_ids != baseline_ids {
            return Err(MetricsError::IdMismatch {
                only_adaptive: adaptive_ids.difference(&baseline_ids).map(|s| (*s).into()).collect(),
                only_baseline: baseline_ids.difference(&adaptive_ids).map(|s| (*s).into()).collect(),
            });
        }
    }

    let total = adaptive.len() as u32;
    let fixed_adaptive = adaptive.iter().filter(|o| o.fixed).count() as u32;
    let fixed_baseline = baseline.map(|b| b.iter().filter(|o| o.fixed).count() as u32);

    let mut agents = Histogram::new();
    let mut iterations = Histogram::new();
    for outcome in adaptive {
        *agents
            .entry(outcome.complexity)
            .or_default()
            .entry(outcome.agents_created_total)
            .or_default() += 1;
        *iterations
            .entry(outcome.complexity)
            .or_default()
            .entry(outcome.iterations.len() as u32)
            .or_default() += 1;
    }
    let calls: u64 = adaptive.iter().map(|o| o.llm_calls).sum();

    Ok(MetricsSummary {
        total,
        fixed_adaptive,
        fixed_baseline,
        fix_rate_adaptive: f64::from(fixed_adaptive) / f64::from(total),
        fix_rate_baseline: fixed_baseline.map(|b| f64::from(b) / f64::from(total)),
        gain_points: fixed_baseline.map(|b| {
            (f64::from(fixed_adaptive) - f64::from(b)) * 100.0 / f64::from(total)
        }),
        agents_histogram_by_complexity: agents,
        iterations_histogram_by_complexity: iterations,
        mean_llm_calls: calls as f64 / f64::from(total),
    })
}

/// Mean gain over several runs (one per model); `None` if any run lacks a
/// baseline or there are no runs.
pub fn mean_gain(summaries: &[MetricsSummary]) -> Option<f64> {
    if summaries.is_empty() {
        return None;
    }
    let gains: Option<Vec<f64>> = summaries.iter().map(|s| s.gain_points).collect();
    let gains = gains?;
    Some(gains.iter().sum::<f64>() / gains.len() as f64)
}

/// Sum of instance counts across every bucket.
pub fn histogram_total(histogram: &Histogram) -> u32 {
    histogram.values().flat_map(|b| b.values()).sum()
}
