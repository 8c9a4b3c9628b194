//! OpenAI-compatible chat-completions backend.

use std::time::Duration;

use adaptive_debug_core::llm::{ChatBackend, ChatMessage, ChatResponse, LlmError, ModelConfig};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HttpSetupError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
}

pub struct HttpChatBackend {
    agent: ureq::Agent,
    api_key: Option<String>,
    backoff_base: Duration,
}

impl HttpChatBackend {
    pub fn new(config: &ModelConfig, api_key: Option<String>) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.request_timeout_ms)))
            .http_status_as_error(false)
            .build();
        Self {
            agent: ureq::Agent::new_with_config(agent_config),
            api_key,
            backoff_base: Duration::from_millis(500),
        }
    }

    /// Reads the API key from the variable named in the config.
    pub fn from_env(config: &ModelConfig) -> Result<Self, HttpSetupError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| HttpSetupError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::new(config, Some(key)))
    }

    /// First retry waits `base`, then 2×, 4×, ...
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn attempt(&self, config: &ModelConfig, body: &str) -> Attempt {
        let mut request = self
            .agent
            .post(&config.endpoint_url)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(LlmError::Transport { reason: e.to_string() }),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(LlmError::Transport { reason: e.to_string() }),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(LlmError::Backend { status, body: text });
        }
        if !(200..300).contains(&status) {
            return Attempt::Done(Err(LlmError::Backend { status, body: text }));
        }
        Attempt::Done(parse_response(status, &text))
    }
}

enum Attempt {
    Done(Result<ChatResponse, LlmError>),
    Retry(LlmError),
}

fn parse_response(status: u16, text: &str) -> Result<ChatResponse, LlmError> {
    let malformed = |why: &str| LlmError::Backend {
        status,
        body: format!("{why}: {text}"),
    };
    let value: Value = serde_json::from_str(text).map_err(|_| malformed("response is not JSON"))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("response has no choices[0].message.content"))?;
    let tokens = |field: &str| {
        value
            .pointer(&format!("/usage/{field}"))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    Ok(ChatResponse {
        content: content.to_string(),
        prompt_tokens: tokens("prompt_tokens"),
        completion_tokens: tokens("completion_tokens"),
    })
}

pub fn request_body(config: &ModelConfig, messages: &[ChatMessage]) -> Value {
    json!({
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    })
}

impl ChatBackend for HttpChatBackend {
    fn complete(
        &mut self,
        config: &ModelConfig,
        messages: &[ChatMessage],
    ) -> Result<ChatResponse, LlmError> {
        let body = request_body(config, messages).to_string();
        let mut delay = self.backoff_base;
        let mut attempt = 0;
        loop {
            match self.attempt(config, &body) {
                Attempt::Done(result) => return result,
                Attempt::Retry(error) if attempt >= config.max_retries => return Err(error),
                Attempt::Retry(_) => {
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}
