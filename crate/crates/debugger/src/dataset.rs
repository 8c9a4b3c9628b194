//! Benchmark datasets: JSON Lines, one canonical instance per line.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use adaptive_debug_core::{BugCategory, BugInstance, ComplexityLevel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFilter {
    #[serde(default)]
    pub categories: Option<BTreeSet<BugCategory>>,
    #[serde(default)]
    pub complexities: Option<BTreeSet<ComplexityLevel>>,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl DatasetFilter {
    pub fn admits(&self, instance: &BugInstance) -> bool {
        self.categories
            .as_ref()
            .is_none_or(|c| c.contains(&instance.category))
            && self
                .complexities
                .as_ref()
                .is_none_or(|c| c.contains(&instance.complexity))
    }
}

/// A record that could not be loaded. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadError {
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "record at line {}", self.line)?;
        if let Some(id) = &self.id {
            write!(f, " ({id})")?;
        }
        write!(f, ": {}", self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("limit must be at least 1")]
    InvalidFilter,
    #[error("{failed} of {total} records failed to load; first: {}", .errors[0])]
    TooManyInvalid {
        failed: usize,
        total: usize,
        errors: Vec<LoadError>,
    },
    #[error("dataset contains no valid records")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<BugInstance>,
    /// Records skipped because they failed to load (at most 10%).
    pub skipped: Vec<LoadError>,
}

fn parse_record(line: &str) -> Result<BugInstance, (Option<String>, String)> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| (None, format!("invalid JSON: {e}")))?;
    let id = value.get("id").and_then(|v| v.as_str()).map(str::to_string);
    let instance: BugInstance =
        serde_json::from_value(value).map_err(|e| (id.clone(), e.to_string()))?;
    if instance.complexity == ComplexityLevel::Unknown {
        return Err((id, "complexity must be easy, medium or hard".into()));
    }
    instance.validate().map_err(|e| (id, e.to_string()))?;
    Ok(instance)
}

/// Parse, validate, filter, shuffle with the filter's seed, then truncate.
pub fn parse_dataset(text: &str, filter: &DatasetFilter) -> Result<Dataset, DatasetError> {
    if filter.limit == Some(0) {
        return Err(DatasetError::InvalidFilter);
    }
    let mut instances = Vec::new();
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut total = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let result = parse_record(line).and_then(|instance| {
            if seen.insert(instance.id.clone()) {
                Ok(instance)
            } else {
                Err((Some(instance.id.clone()), "duplicate id".into()))
            }
        });
        match result {
            Ok(instance) => instances.push(instance),
            Err((id, reason)) => errors.push(LoadError {
                line: i + 1,
                id,
                reason,
            }),
        }
    }
    if errors.len() * 10 > total {
        return Err(DatasetError::TooManyInvalid {
            failed: errors.len(),
            total,
            errors,
        });
    }
    if instances.is_empty() {
        return Err(DatasetError::Empty);
    }
    instances.retain(|i| filter.admits(i));
    instances.shuffle(&mut ChaCha8Rng::seed_from_u64(filter.seed));
    if let Some(limit) = filter.limit {
        instances.truncate(limit);
    }
    Ok(Dataset {
        instances,
        skipped: errors,
    })
}

pub fn load_dataset(path: &Path, filter: &DatasetFilter) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, filter)
}
