//! Prompt rendering and few-shot example selection.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::config::CiDialect;
use crate::corpus::{Direction, MigrationCorpus, MigrationPair, Split};
use crate::normalize::{normalize, NormalizedConfig};

/// Version of the prompt wording; recorded in reports.
pub const TEMPLATE_ID: &str = "cigrate-v1";
pub const DEFAULT_MAX_OUTPUT_TOKENS: usize = 4096;

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
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// A fully rendered request: system turn, optional few-shot turns, task turn.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub model_name: String,
    pub max_output_tokens: usize,
}

/// Decoding settings applied to every prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSettings {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: usize,
}

impl PromptSettings {
    /// Deterministic decoding for `model_name`.
    pub fn new(model_name: impl Into<String>) -> Self {
        Self {
            model_name: model_name.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The first `k` training pairs by pair id.
    First,
    /// A seeded sample of `k` training pairs.
    Random { seed: u64 },
    /// Training pairs sharing the most feature categories with the query.
    SameFeatureOverlap,
}

impl Selection {
    pub fn name(&self) -> String {
        match self {
            Selection::First => "first".into(),
            Selection::Random { seed } => format!("random:{seed}"),
            Selection::SameFeatureOverlap => "feature_overlap".into(),
        }
    }
}

/// How in-context examples are chosen. Examples always come from the Train
/// split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotPolicy {
    pub k: usize,
    pub selection: Selection,
}

/// The fixed system instruction for one direction.
pub fn system_prompt(source: CiDialect, target: CiDialect) -> String {
    format!(
        "You migrate continuous integration configuration from {src} to {dst}. \
         Translate the {src} configuration supplied by the user into an equivalent {dst} configuration, \
         keeping every build command, environment variable, build matrix, cache and deployment step \
         that {dst} can express. Reply with exactly one fenced YAML code block containing the complete \
         {dst} configuration and nothing else.",
        src = source.display_name(),
        dst = target.display_name(),
    )
}

fn fenced(yaml: &str) -> String {
    format!("```yaml\n{}\n```", yaml.trim_end())
}

/// The user turn carrying a source config.
pub fn task_message(source: &NormalizedConfig, target: CiDialect) -> String {
    format!(
        "Migrate this {} configuration to {}:\n{}",
        source.dialect.display_name(),
        target.display_name(),
        fenced(&source.to_yaml())
    )
}

/// Picks `policy.k` training pairs oriented in `direction`.
pub fn select_few_shot_examples(
    policy: &FewShotPolicy,
    direction: Direction,
    corpus: &MigrationCorpus,
    query: &NormalizedConfig,
) -> Result<Vec<MigrationPair>, LlmError> {
    if policy.k == 0 {
        return Ok(Vec::new());
    }
    let mut candidates = corpus.oriented(Split::Train, direction);
    if candidates.len() < policy.k {
        return Err(LlmError::InsufficientExamples {
            needed: policy.k,
            available: candidates.len(),
        });
    }
    let chosen: Vec<MigrationPair> = match policy.selection {
        Selection::First => candidates.into_iter().take(policy.k).collect(),
        Selection::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates.choose_multiple(&mut rng, policy.k).cloned().collect()
        }
        Selection::SameFeatureOverlap => {
            let overlap = |pair: &MigrationPair| {
                normalize(&pair.source).feature_set.intersection(&query.feature_set).count()
            };
            let mut scored: Vec<(usize, MigrationPair)> = candidates.drain(..).map(|p| (overlap(&p), p)).collect();
            scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.pair_id.cmp(&b.1.pair_id)));
            scored.into_iter().take(policy.k).map(|(_, p)| p).collect()
        }
    };
    debug_assert!(chosen.iter().all(|p| p.split == Split::Train));
    Ok(chosen)
}

/// Renders the chat messages for migrating `source` to `target`. A corpus
/// is needed only for few-shot prompts.
pub fn build_prompt(
    source: &NormalizedConfig,
    target: CiDialect,
    few_shot: Option<&FewShotPolicy>,
    corpus: Option<&MigrationCorpus>,
    settings: &PromptSettings,
) -> Result<PromptBundle, LlmError> {
    if source.dialect == target {
        return Err(LlmError::SameDialect(target));
    }
    let direction = Direction {
        source: source.dialect,
        target,
    };
    let mut messages = vec![ChatMessage::new(Role::System, system_prompt(source.dialect, target))];
    if let Some(policy) = few_shot.filter(|p| p.k > 0) {
        let corpus = corpus.ok_or(LlmError::InsufficientExamples {
            needed: policy.k,
            available: 0,
        })?;
        for example in select_few_shot_examples(policy, direction, corpus, source)? {
            let example_source = normalize(&example.source);
            let example_target = normalize(&example.reference_target);
            messages.push(ChatMessage::new(Role::User, task_message(&example_source, target)));
            messages.push(ChatMessage::new(Role::Assistant, fenced(&example_target.to_yaml())));
        }
    }
    messages.push(ChatMessage::new(Role::User, task_message(source, target)));
    Ok(PromptBundle {
        messages,
        temperature: settings.temperature,
        model_name: settings.model_name.clone(),
        max_output_tokens: settings.max_output_tokens,
    })
}
