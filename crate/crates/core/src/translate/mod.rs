//! Deterministic rule-based migration between Travis CI and GitHub Actions.
//!
//! Each dialect lowers into the neutral [`PipelineIR`] and is raised back
//! out of it. Lowering records a [`MigrationWarning`] for every source key
//! that has no counterpart in the other dialect, so raising never needs to
//! drop anything silently.

mod gha;
mod ir;
mod travis;

use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;
use thiserror::Error;

pub use gha::{lower_gha_to_ir, raise_ir_to_gha};
pub use ir::*;
pub use travis::{lower_travis_to_ir, raise_ir_to_travis};

use crate::config::{CiDialect, RawConfig, YamlPath};
use crate::normalize::{normalize, NormalizedConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("E_WRONG_DIALECT: expected a {expected} config, got {found}")]
    WrongDialect { expected: CiDialect, found: CiDialect },
    #[error("E_EMPTY_PIPELINE: {0}")]
    EmptyPipeline(String),
    #[error("E_SAME_DIALECT: config is already {0}")]
    SameDialect(CiDialect),
}

impl TranslateError {
    pub fn code(&self) -> &'static str {
        match self {
            TranslateError::WrongDialect { .. } => "E_WRONG_DIALECT",
            TranslateError::EmptyPipeline(_) => "E_EMPTY_PIPELINE",
            TranslateError::SameDialect(_) => "E_SAME_DIALECT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationResult {
    pub output: NormalizedConfig,
    pub warnings: Vec<MigrationWarning>,
}

/// Normalizes, lowers and raises `config` into the `target` dialect.
pub fn migrate_rules(config: &RawConfig, target: CiDialect) -> Result<MigrationResult, TranslateError> {
    if config.dialect == target {
        return Err(TranslateError::SameDialect(target));
    }
    let normalized = normalize(config);
    let ir = match config.dialect {
        CiDialect::TravisCI => lower_travis_to_ir(&normalized)?,
        CiDialect::GitHubActions => lower_gha_to_ir(&normalized)?,
    };
    let output = match target {
        CiDialect::GitHubActions => raise_ir_to_gha(&ir),
        CiDialect::TravisCI => {
            if ir.commands().is_empty() {
                return Err(TranslateError::EmptyPipeline(
                    "no run steps to place under `script`".into(),
                ));
            }
            raise_ir_to_travis(&ir)
        }
    };
    Ok(MigrationResult {
        output,
        warnings: ir.warnings,
    })
}

fn check_dialect(config: &NormalizedConfig, expected: CiDialect) -> Result<(), TranslateError> {
    if config.dialect == expected {
        Ok(())
    } else {
        Err(TranslateError::WrongDialect {
            expected,
            found: config.dialect,
        })
    }
}

/// Collects warnings; `loud == false` suppresses duplicates for keys that
/// were already reported where they were first seen.
#[derive(Debug, Default)]
struct Warner {
    warnings: Vec<MigrationWarning>,
}

impl Warner {
    fn warn(&mut self, loud: bool, code: WarningCode, path: &YamlPath, message: impl Into<String>) {
        if loud {
            self.warnings.push(MigrationWarning {
                code,
                path: path.to_string(),
                message: message.into(),
            });
        }
    }

    /// Replaces every warning at or below `path` with a single one.
    fn replace(&mut self, code: WarningCode, path: &YamlPath, message: impl Into<String>) {
        self.warnings.retain(|w| !path_covers(&path.to_string(), &w.path));
        self.warn(true, code, path, message);
    }
}

/// Whether the rendered path `outer` equals or contains `inner`.
fn path_covers(outer: &str, inner: &str) -> bool {
    inner
        .strip_prefix(outer)
        .is_some_and(|rest| rest.is_empty() || rest.starts_with('.') || rest.starts_with('['))
}

/// Splits a Travis-style `A=1 B="two words"` string into assignments.
/// Returns `None` when any word is not an assignment.
pub fn parse_assignments(text: &str) -> Option<IndexMap<String, String>> {
    let mut out = IndexMap::new();
    let mut chars = text.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        if chars.peek().is_none() {
            break;
        }
        let mut name = String::new();
        while let Some(c) = chars.next_if(|&c| c != '=' && !c.is_whitespace()) {
            name.push(c);
        }
        if name.is_empty() || chars.next() != Some('=') {
            return None;
        }
        let mut value = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() {
                break;
            }
            chars.next();
            match c {
                '"' => loop {
                    match chars.next()? {
                        '"' => break,
                        '\\' => match chars.next()? {
                            e @ ('"' | '\\' | '$' | '`') => value.push(e),
                            e => {
                                value.push('\\');
                                value.push(e);
                            }
                        },
                        other => value.push(other),
                    }
                },
                '\'' => loop {
                    match chars.next()? {
                        '\'' => break,
                        other => value.push(other),
                    }
                },
                other => value.push(other),
            }
        }
        out.insert(name, value);
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

/// Inverse of [`parse_assignments`].
pub fn format_assignments(assignments: &IndexMap<String, String>) -> String {
    assignments
        .iter()
        .map(|(k, v)| format!("{k}={}", quote_value(v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn quote_value(value: &str) -> String {
    let plain = !value.is_empty()
        && !value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '"' | '\'' | '\\'));
    if plain {
        return value.to_string();
    }
    let mut out = String::from("\"");
    for c in value.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

static SLUG_JUNK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^a-z0-9_]+").unwrap());

/// Turns a display name into an identifier valid as a GitHub Actions job id.
fn slug(text: &str) -> String {
    let lowered = text.to_lowercase();
    let s = SLUG_JUNK.replace_all(&lowered, "-");
    let s = s.trim_matches('-');
    if s.is_empty() {
        "job".to_string()
    } else if s.starts_with(|c: char| c.is_ascii_digit()) {
        format!("job-{s}")
    } else {
        s.to_string()
    }
}

/// Returns `base`, or `base-2`, `base-3`, ... if already taken.
fn unique_id(base: &str, taken: &mut Vec<String>) -> String {
    let mut candidate = base.to_string();
    let mut n = 2;
    while taken.contains(&candidate) {
        candidate = format!("{base}-{n}");
        n += 1;
    }
    taken.push(candidate.clone());
    candidate
}

/// Name given to the synthesized apt step so it can be recognized again.
const APT_STEP_NAME: &str = "Install apt packages";
const APT_PREFIX: &str = "sudo apt-get update && sudo apt-get install -y ";
