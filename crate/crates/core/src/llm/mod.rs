//! Zero-shot and few-shot prompting of a chat-completion endpoint, output
//! extraction, and fine-tune dataset export.

mod client;
mod prompt;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

pub use client::{complete, request_body, request_fingerprint, CompletionResult, EndpointConfig, API_KEY_ENV};
pub use prompt::{
    build_prompt, select_few_shot_examples, system_prompt, task_message, ChatMessage, FewShotPolicy, PromptBundle,
    PromptSettings, Role, Selection, DEFAULT_MAX_OUTPUT_TOKENS, TEMPLATE_ID,
};

use crate::config::{parse_config, parse_yaml, CiDialect, RawConfig};
use crate::corpus::{Direction, MigrationCorpus, Split};
use crate::normalize::normalize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("E_SAME_DIALECT: source is already {0}")]
    SameDialect(CiDialect),
    #[error("E_INSUFFICIENT_EXAMPLES: {needed} examples requested, {available} training pairs available")]
    InsufficientExamples { needed: usize, available: usize },
    #[error("E_HTTP: status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("E_TIMEOUT: endpoint did not answer in time")]
    Timeout,
    #[error("E_TRANSPORT: {0}")]
    Transport(String),
    #[error("E_EMPTY_RESPONSE: reply has no message content")]
    EmptyResponse,
    #[error("E_AUTH: {0}")]
    Auth(String),
    #[error("E_UNPARSEABLE_OUTPUT: {0}")]
    UnparseableOutput(String),
    #[error("E_EMPTY_SPLIT: no training pairs to export")]
    EmptySplit,
    #[error("E_IO: {0}")]
    Io(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::SameDialect(_) => "E_SAME_DIALECT",
            LlmError::InsufficientExamples { .. } => "E_INSUFFICIENT_EXAMPLES",
            LlmError::Http { .. } => "E_HTTP",
            LlmError::Timeout => "E_TIMEOUT",
            LlmError::Transport(_) => "E_TRANSPORT",
            LlmError::EmptyResponse => "E_EMPTY_RESPONSE",
            LlmError::Auth(_) => "E_AUTH",
            LlmError::UnparseableOutput(_) => "E_UNPARSEABLE_OUTPUT",
            LlmError::EmptySplit => "E_EMPTY_SPLIT",
            LlmError::Io(_) => "E_IO",
        }
    }

    /// Whether the failure came from talking to the endpoint.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            LlmError::Http { .. } | LlmError::Timeout | LlmError::Transport(_) | LlmError::EmptyResponse | LlmError::Auth(_)
        )
    }
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// The body of the first fenced code block, or the whole text trimmed when
/// there is none. The result must parse as a single YAML document.
pub fn extract_yaml(raw_text: &str) -> Result<String, LlmError> {
    let lines: Vec<&str> = raw_text.lines().collect();
    let body = match lines.iter().position(|l| is_fence(l)) {
        Some(open) => {
            let rest = &lines[open + 1..];
            let close = rest.iter().position(|l| is_fence(l)).unwrap_or(rest.len());
            rest[..close].join("\n")
        }
        None => raw_text.trim().to_string(),
    };
    let body = body.trim_end().to_string();
    if body.trim().is_empty() {
        return Err(LlmError::UnparseableOutput("reply holds no YAML".into()));
    }
    parse_yaml(&body).map_err(|e| LlmError::UnparseableOutput(e.to_string()))?;
    Ok(body)
}

/// A completed LLM migration.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmMigration {
    pub completion: CompletionResult,
    pub output: RawConfig,
}

/// Prompts the endpoint to migrate `source` and parses the reply as a
/// `target` config.
pub fn migrate_llm(
    source: &RawConfig,
    target: CiDialect,
    few_shot: Option<&FewShotPolicy>,
    corpus: Option<&MigrationCorpus>,
    settings: &PromptSettings,
    endpoint: &EndpointConfig,
) -> Result<LlmMigration, LlmError> {
    let bundle = build_prompt(&normalize(source), target, few_shot, corpus, settings)?;
    let completion = complete(&bundle, endpoint)?;
    let yaml = match &completion.extracted_yaml {
        Some(yaml) => yaml.clone(),
        None => return Err(extract_yaml(&completion.raw_text).unwrap_err()),
    };
    let output = parse_config(yaml.as_bytes(), target).map_err(|e| LlmError::UnparseableOutput(e.to_string()))?;
    Ok(LlmMigration { completion, output })
}

#[derive(Serialize)]
struct FinetuneRecord {
    messages: [ChatMessage; 3],
}

/// Writes one chat-format JSON line per Train pair in `direction`: the
/// shared system prompt, the normalized source as the user turn and the
/// normalized reference as the assistant turn. Returns the record count.
pub fn export_finetune_dataset(
    corpus: &MigrationCorpus,
    direction: Direction,
    out: &mut dyn Write,
) -> Result<usize, LlmError> {
    let pairs = corpus.oriented(Split::Train, direction);
    if pairs.is_empty() {
        return Err(LlmError::EmptySplit);
    }
    let system = system_prompt(direction.source, direction.target);
    for pair in &pairs {
        debug_assert_eq!(pair.split, Split::Train);
        let record = FinetuneRecord {
            messages: [
                ChatMessage::new(Role::System, system.clone()),
                ChatMessage::new(Role::User, normalize(&pair.source).to_yaml()),
                ChatMessage::new(Role::Assistant, normalize(&pair.reference_target).to_yaml()),
            ],
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| LlmError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| LlmError::Io(e.to_string()))?;
    Ok(pairs.len())
}
