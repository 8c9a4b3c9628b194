//! Chat-completion access.
//!
//! [`ChatBackend`] is the transport; [`LlmClient`] sits on top of a backend
//! for the length of one session, counts calls, records every completion in
//! the transcript and implements structured output with repair rounds.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::OutputSchema;
use crate::transcript::{Event, EventSink};
use crate::types::TypeError;

/// Repair rounds after the first structured-output attempt.
pub const MAX_REPAIR_ROUNDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backend_kind: BackendKind,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_timeout_ms: u64,
    pub max_retries: u32,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

fn default_api_key_env() -> String {
    "LLM_API_KEY".to_string()
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            backend_kind: BackendKind::HttpChat,
            endpoint_url: "http://localhost:8000/v1/chat/completions".to_string(),
            model_name: "gpt-4".to_string(),
            temperature: 0.2,
            max_tokens: 2048,
            request_timeout_ms: 120_000,
            max_retries: 3,
            api_key_env: default_api_key_env(),
        }
    }
}

impl ModelConfig {
    pub fn scripted() -> Self {
        Self {
            backend_kind: BackendKind::Scripted,
            endpoint_url: String::new(),
            model_name: "scripted".to_string(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TypeError> {
        let fail = |reason: &str| Err(TypeError::new("ModelConfig", reason));
        if !(0.0..=2.0).contains(&self.temperature) {
            return fail("temperature must be in [0, 2]");
        }
        if self.max_tokens == 0 {
            return fail("max_tokens must be positive");
        }
        if self.request_timeout_ms == 0 {
            return fail("request_timeout_ms must be positive");
        }
        if self.backend_kind == BackendKind::HttpChat
            && (self.endpoint_url.is_empty() || self.model_name.is_empty())
        {
            return fail("http backend needs endpoint_url and model_name");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

impl ChatResponse {
    pub fn text(content: impl Into<String>) -> Self {
        Self {
            content: content.into(),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmError {
    #[error("invalid request: {reason}")]
    InvalidRequest { reason: String },
    #[error("transport error: {reason}")]
    Transport { reason: String },
    #[error("backend returned HTTP {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("scripted backend has no response left")]
    ScriptExhausted,
    #[error("replay diverged at call {call_index}: {reason}")]
    ReplayMismatch { call_index: u64, reason: String },
}

impl LlmError {
    /// Errors that must stop a session instead of degrading it.
    pub fn is_fatal(&self) -> bool {
        matches!(self, LlmError::ReplayMismatch { .. })
    }
}

pub trait ChatBackend {
    fn complete(
        &mut self,
        config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &mut B {
    fn complete(
        &mut self,
        config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError> {
        (**self).complete(config, messages)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for alloc::boxed::Box<B> {
    fn complete(
        &mut self,
        config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError> {
        (**self).complete(config, messages)
    }
}

/// Replays a fixed list of responses, one per call, ignoring the request.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    responses: VecDeque<String>,
    requests: Vec<Vec<ChatMessage>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            requests: Vec::new(),
        }
    }

    /// Every request received so far, in order.
    pub fn requests(&self) -> &[Vec<ChatMessage>] {
        &self.requests
    }

    pub fn remaining(&self) -> usize {
        self.responses.len()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &mut self,
        _config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError> {
        self.requests.push(messages.to_vec());
        self.responses
            .pop_front()
            .map(ChatResponse::text)
            .ok_or(LlmError::ScriptExhausted)
    }
}

/// Stable hash of a rendered request, used to detect replay divergence.
pub fn request_hash(messages: &[ChatMessage]) -> String {
    let canonical = serde_json::to_vec(messages).unwrap_or_default();
    crate::hash::sha256_hex(&canonical)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructuredError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("no valid {schema} output after repairs: {reason}")]
    Invalid {
        schema: &'static str,
        reason: String,
        /// Last raw model text, kept for the transcript.
        raw: String,
    },
}

impl StructuredError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, StructuredError::Llm(e) if e.is_fatal())
    }

    pub fn raw_text(&self) -> Option<&str> {
        match self {
            StructuredError::Invalid { raw, .. } => Some(raw),
            StructuredError::Llm(_) => None,
        }
    }
}

/// Per-session view of a backend: counts calls and records completions.
pub struct LlmClient<'a> {
    backend: &'a mut dyn ChatBackend,
    sink: &'a mut dyn EventSink,
    config: &'a ModelConfig,
    calls: u64,
}

impl<'a> LlmClient<'a> {
    pub fn new(
        backend: &'a mut dyn ChatBackend,
        sink: &'a mut dyn EventSink,
        config: &'a ModelConfig,
    ) -> Self {
        Self {
            backend,
            sink,
            config,
            calls: 0,
        }
    }

    /// Completions that returned a response. Equals the number of
    /// `completion` events this client wrote.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    pub fn emit(&mut self, event: Event) {
        self.sink.emit(event);
    }

    pub fn complete(&mut self, messages: &[ChatMessage]) -> Result<ChatResponse, LlmError> {
        if messages.is_empty() {
            return Err(LlmError::InvalidRequest {
                reason: "no messages".into(),
            });
        }
        if let Some(pos) = messages.iter().position(|m| m.content.is_empty()) {
            return Err(LlmError::InvalidRequest {
                reason: format!("message {pos} is empty"),
            });
        }
        if messages[1..].iter().any(|m| m.role == Role::System) {
            return Err(LlmError::InvalidRequest {
                reason: "only the first message may be a system message".into(),
            });
        }
        let hash = request_hash(messages);
        let response = match self.backend.complete(self.config, messages) {
            Ok(response) => response,
            Err(error) => {
                if !error.is_fatal() {
                    self.sink.emit(Event::CompletionFailed {
                        request_hash: hash,
                        error: error.clone(),
                    });
                }
                return Err(error);
            }
        };
        let call_index = self.calls;
        self.calls += 1;
        self.sink.emit(Event::Completion {
            call_index,
            request_hash: hash,
            response: response.clone(),
        });
        Ok(response)
    }

    /// Completion parsed and validated against `S`. Invalid output triggers
    /// up to [`MAX_REPAIR_ROUNDS`] re-asks that explain the problem.
    pub fn complete_structured<S: OutputSchema>(
        &mut self,
        messages: &[ChatMessage],
    ) -> Result<S::Output, StructuredError> {
        let mut conversation = messages.to_vec();
        let mut last_raw = String::new();
        let mut last_reason = String::new();
        for round in 0..=MAX_REPAIR_ROUNDS {
            let response = self.complete(&conversation)?;
            match parse_structured::<S>(&response.content) {
                Ok(value) => return Ok(value),
                Err(reason) => {
                    if round < MAX_REPAIR_ROUNDS {
                        let echoed = if response.content.trim().is_empty() {
                            "(empty response)".to_string()
                        } else {
                            response.content.clone()
                        };
                        conversation.push(ChatMessage::assistant(echoed));
                        conversation.push(ChatMessage::user(repair_message::<S>(&reason)));
                    }
                    last_raw = response.content;
                    last_reason = reason;
                }
            }
        }
        Err(StructuredError::Invalid {
            schema: S::ID,
            reason: last_reason,
            raw: last_raw,
        })
    }
}

fn repair_message<S: OutputSchema>(reason: &str) -> String {
    format!(
        "Your previous reply could not be used: {reason}.\n\
         Reply again with a single JSON object and nothing else, matching the {id} format:\n{shape}",
        id = S::ID,
        shape = S::SHAPE,
    )
}

/// Extract, parse and validate a structured reply.
pub fn parse_structured<S: OutputSchema>(text: &str) -> Result<S::Output, String> {
    let value = extract_json_object(text)?;
    S::from_value(value)
}

/// First balanced top-level `{...}` in `text` (code fences stripped) that
/// parses as a JSON object.
pub fn extract_json_object(text: &str) -> Result<serde_json::Value, String> {
    let stripped: String = text
        .lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n");
    let bytes = stripped.as_bytes();
    let mut start = 0;
    while let Some(offset) = stripped[start..].find('{') {
        let open = start + offset;
        if let Some(close) = balanced_end(bytes, open) {
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(&stripped[open..=close]) {
                if value.is_object() {
                    return Ok(value);
                }
            }
        }
        start = open + 1;
    }
    Err("no JSON object found in the reply".to_string())
}

/// Index of the `}` closing the `{` at `open`, honoring JSON string escapes.
fn balanced_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
