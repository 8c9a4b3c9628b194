//! Adaptive multi-agent debugging.
//!
//! A main agent analyzes a buggy program, decides which specialized agents to
//! create and in what order they run, dispatches them, validates the result
//! and replans with a different strategy when the fix does not hold.
//!
//! This crate is `no_std` (it needs `alloc`). Everything that touches the
//! outside world is behind a trait:
//!
//! * [`llm::ChatBackend`] for model completions,
//! * [`sandbox::Executor`] for running candidate fixes against tests,
//! * [`transcript::EventSink`] for the session audit trail,
//! * [`orchestrator::Clock`] for wall-clock accounting.
//!
//! The `adaptive-debug` crate provides the std implementations (HTTP backend,
//! subprocess executor, JSONL transcripts, dataset loading, benchmarking).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agents;
pub mod baseline;
pub mod llm;
pub mod metrics;
pub mod orchestrator;
pub mod prompts;
pub mod sandbox;
pub mod schema;
pub mod transcript;
pub mod types;

mod hash;
mod text;

pub use hash::sha256_hex;
pub use llm::{ChatBackend, ChatMessage, ChatResponse, LlmClient, LlmError, ModelConfig};
pub use orchestrator::{plan_signature, Orchestrator, OrchestratorConfig, SessionError};
pub use prompts::Catalog;
pub use sandbox::{evaluate_candidate, ExecutionReport, Executor, ResourceLimits};
pub use types::*;
