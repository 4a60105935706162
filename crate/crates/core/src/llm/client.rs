//! The chat-completion HTTP client.

use std::thread;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::prompt::{ChatMessage, PromptBundle};
use super::{extract_yaml, LlmError};

/// Environment variable holding the endpoint credential.
pub const API_KEY_ENV: &str = "CIGRATE_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    /// Base URL; requests go to `{base_url}/chat/completions`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles per attempt.
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key,
            timeout: Duration::from_secs(120),
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
        }
    }

    /// Reads the credential from [`API_KEY_ENV`].
    pub fn from_env(base_url: impl Into<String>) -> Self {
        Self::new(base_url, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    fn backoff(&self, failed_attempt: u32) -> Duration {
        self.initial_backoff
            .saturating_mul(1 << (failed_attempt - 1).min(16))
            .min(self.max_backoff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub raw_text: String,
    /// Present when the reply holds parseable YAML.
    pub extracted_yaml: Option<String>,
    pub model_name: String,
    pub request_fingerprint: String,
}

/// The wire body: exactly these four fields, so only one completion is
/// ever requested.
#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: usize,
}

/// The serialized request body for `bundle`.
pub fn request_body(bundle: &PromptBundle) -> String {
    serde_json::to_string(&ChatRequest {
        model: &bundle.model_name,
        messages: &bundle.messages,
        temperature: bundle.temperature,
        max_tokens: bundle.max_output_tokens,
    })
    .expect("request serializes")
}

/// SHA-256 of the serialized request body.
pub fn request_fingerprint(bundle: &PromptBundle) -> String {
    hex::encode(Sha256::digest(request_body(bundle).as_bytes()))
}

enum Attempt {
    Done(String),
    Retry(LlmError),
    Fail(LlmError),
}

fn attempt(client: &reqwest::blocking::Client, endpoint: &EndpointConfig, key: &str, body: &str) -> Attempt {
    let response = client
        .post(endpoint.url())
        .bearer_auth(key)
        .header(reqwest::header::CONTENT_TYPE, "application/json")
        .body(body.to_string())
        .send();
    let response = match response {
        Ok(r) => r,
        Err(e) if e.is_timeout() => return Attempt::Retry(LlmError::Timeout),
        Err(e) => return Attempt::Retry(LlmError::Transport(e.to_string())),
    };
    let status = response.status().as_u16();
    let text = match response.text() {
        Ok(t) => t,
        Err(e) if e.is_timeout() => return Attempt::Retry(LlmError::Timeout),
        Err(e) => return Attempt::Retry(LlmError::Transport(e.to_string())),
    };
    match status {
        200..=299 => Attempt::Done(text),
        401 | 403 => Attempt::Fail(LlmError::Auth(format!("endpoint rejected the credential ({status})"))),
        408 | 429 | 500..=599 => Attempt::Retry(LlmError::Http { status, body: text }),
        _ => Attempt::Fail(LlmError::Http { status, body: text }),
    }
}

/// Content of the first choice's message.
fn first_choice(body: &str) -> Result<String, LlmError> {
    let json: Value = serde_json::from_str(body).map_err(|_| LlmError::EmptyResponse)?;
    json.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .map(str::to_string)
        .ok_or(LlmError::EmptyResponse)
}

/// Sends `bundle` once, retrying timeouts, transport failures, 408, 429 and
/// 5xx replies with exponential backoff up to `max_attempts` in total.
pub fn complete(bundle: &PromptBundle, endpoint: &EndpointConfig) -> Result<CompletionResult, LlmError> {
    let key = endpoint
        .api_key
        .as_deref()
        .filter(|k| !k.is_empty())
        .ok_or_else(|| LlmError::Auth(format!("{API_KEY_ENV} is not set")))?;
    let client = reqwest::blocking::Client::builder()
        .timeout(endpoint.timeout)
        .build()
        .map_err(|e| LlmError::Transport(e.to_string()))?;
    let body = request_body(bundle);
    let attempts = endpoint.max_attempts.max(1);
    let mut last = LlmError::Transport("no attempt made".into());
    for n in 1..=attempts {
        match attempt(&client, endpoint, key, &body) {
            Attempt::Done(text) => {
                let raw_text = first_choice(&text)?;
                return Ok(CompletionResult {
                    extracted_yaml: extract_yaml(&raw_text).ok(),
                    raw_text,
                    model_name: bundle.model_name.clone(),
                    request_fingerprint: hex::encode(Sha256::digest(body.as_bytes())),
                });
            }
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(e) => {
                last = e;
                if n < attempts {
                    thread::sleep(endpoint.backoff(n));
                }
            }
        }
    }
    Err(last)
}
