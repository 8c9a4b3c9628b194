#![allow(dead_code)]

use std::path::{Path, PathBuf};

use adaptive_debug::bench::{BackendFactory, Harness};
use adaptive_debug::dataset::{load_dataset, DatasetFilter};
use adaptive_debug::script::ScriptBook;
use adaptive_debug_core::llm::ChatBackend;
use adaptive_debug_core::orchestrator::FrozenClock;
use adaptive_debug_core::sandbox::ScriptedExecutor;
use adaptive_debug_core::{BugInstance, Catalog, ModelConfig, OrchestratorConfig};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// The five-instance scripted benchmark shipped as a fixture.
pub struct Bench5 {
    pub instances: Vec<BugInstance>,
    pub book: ScriptBook,
    pub executor: ScriptedExecutor,
    pub config: OrchestratorConfig,
    pub catalog: Catalog,
}

impl Bench5 {
    pub fn load() -> Self {
        let instances = load_dataset(&fixture("bench5/dataset.jsonl"), &DatasetFilter::default())
            .unwrap()
            .instances;
        let book = ScriptBook::load(&fixture("bench5/script.json")).unwrap();
        let rules = std::fs::read_to_string(fixture("bench5/executor.json")).unwrap();
        let executor = serde_json::from_str(&rules).unwrap();
        let config = OrchestratorConfig {
            model: ModelConfig::scripted(),
            ..OrchestratorConfig::default()
        };
        Self {
            instances,
            book,
            executor,
            config,
            catalog: Catalog::builtin(),
        }
    }

    pub fn instance(&self, id: &str) -> &BugInstance {
        self.instances.iter().find(|i| i.id == id).unwrap()
    }

    pub fn adaptive_backends(&self) -> impl BackendFactory + '_ {
        move |i: &BugInstance| -> Result<Box<dyn ChatBackend>, String> {
            Ok(Box::new(self.book.backend_for(&i.id)?))
        }
    }

    pub fn baseline_backends(&self) -> impl BackendFactory + '_ {
        move |i: &BugInstance| -> Result<Box<dyn ChatBackend>, String> {
            Ok(Box::new(self.book.baseline_backend_for(&i.id)?))
        }
    }

    pub fn harness<'a>(&'a self, backends: &'a dyn BackendFactory, concurrency: usize) -> Harness<'a> {
        Harness {
            config: &self.config,
            catalog: &self.catalog,
            executor: Some(&self.executor),
            clock: &FrozenClock,
            backends,
            concurrency,
        }
    }
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Per-model fixed counts out of 50: (label, adaptive, baseline).
pub const MODEL_RUNS: [(&str, usize, usize); 4] = [
    ("Llama3", 35, 26),
    ("DeepSeek", 38, 32),
    ("Mistral", 33, 29),
    ("GPT-4", 44, 41),
];

pub fn synthetic_outcomes(
    fixed_adaptive: usize,
    fixed_baseline: usize,
) -> (Vec<adaptive_debug_core::SessionOutcome>, Vec<adaptive_debug_core::baseline::BaselineOutcome>) {
    use adaptive_debug_core::baseline::BaselineOutcome;
    use adaptive_debug_core::{ComplexityLevel, SessionOutcome};
    let complexity = |i: usize| match i % 3 {
        0 => ComplexityLevel::Low,
        1 => ComplexityLevel::Medium,
        _ => ComplexityLevel::High,
    };
    let adaptive = (0..50)
        .map(|i| SessionOutcome {
            instance_id: format!("q{i:02}"),
            complexity: complexity(i),
            fixed: i < fixed_adaptive,
            iterations: vec![],
            agents_created_total: 0,
            llm_calls: 0,
            wall_time_ms: 0,
            diagnostic: Some("synthetic".into()),
        })
        .collect();
    let baseline = (0..50)
        .map(|i| BaselineOutcome {
            instance_id: format!("q{i:02}"),
            complexity: complexity(i),
            fixed: i < fixed_baseline,
            llm_calls: 1,
            diagnostic: None,
        })
        .collect();
    (adaptive, baseline)
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) {
    let text: String = items
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    std::fs::write(path, text).unwrap();
}

/// Write `<label>.jsonl` and `<label>.baseline.jsonl` for every model run.
pub fn write_model_runs(dir: &Path) -> Vec<(String, PathBuf, PathBuf)> {
    MODEL_RUNS
        .iter()
        .map(|(label, fa, fb)| {
            let (adaptive, baseline) = synthetic_outcomes(*fa, *fb);
            let a = dir.join(format!("{label}.jsonl"));
            let b = dir.join(format!("{label}.baseline.jsonl"));
            write_jsonl(&a, &adaptive);
            write_jsonl(&b, &baseline);
            (label.to_string(), a, b)
        })
        .collect()
}
