//! Structural linters for Travis CI and GitHub Actions configs.
//!
//! Every rule has a stable identifier (`GHA001`..`GHA010`, `TRV001`..`TRV007`)
//! so reports can be compared across linter implementations. Only
//! [`Severity::Error`] diagnostics fail a report.

mod gha;
mod keys;
mod travis;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{CiDialect, RawConfig, YamlPath};

pub use keys::KeyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "Error",
            Severity::Warning => "Warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintDiagnostic {
    pub severity: Severity,
    pub rule_id: &'static str,
    pub path: YamlPath,
    pub message: String,
}

impl fmt::Display for LintDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.severity, self.rule_id, self.path, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintReport {
    pub dialect: CiDialect,
    pub diagnostics: Vec<LintDiagnostic>,
    pub passed: bool,
}

impl LintReport {
    fn new(dialect: CiDialect, mut diagnostics: Vec<LintDiagnostic>) -> Self {
        diagnostics.sort_by(|a, b| {
            a.path
                .to_string()
                .cmp(&b.path.to_string())
                .then_with(|| a.rule_id.cmp(b.rule_id))
                .then_with(|| a.message.cmp(&b.message))
        });
        let passed = diagnostics.iter().all(|d| d.severity != Severity::Error);
        Self {
            dialect,
            diagnostics,
            passed,
        }
    }

    pub fn errors(&self) -> impl Iterator<Item = &LintDiagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LintError {
    #[error("E_WRONG_DIALECT: expected a {expected} config, got {found}")]
    WrongDialect { expected: CiDialect, found: CiDialect },
}

impl LintError {
    pub fn code(&self) -> &'static str {
        "E_WRONG_DIALECT"
    }
}

/// Collects diagnostics while a linter walks a document.
#[derive(Default)]
struct Sink(Vec<LintDiagnostic>);

impl Sink {
    fn error(&mut self, rule_id: &'static str, path: YamlPath, message: impl Into<String>) {
        self.push(Severity::Error, rule_id, path, message);
    }

    fn warning(&mut self, rule_id: &'static str, path: YamlPath, message: impl Into<String>) {
        self.push(Severity::Warning, rule_id, path, message);
    }

    fn push(&mut self, severity: Severity, rule_id: &'static str, path: YamlPath, message: impl Into<String>) {
        self.0.push(LintDiagnostic {
            severity,
            rule_id,
            path,
            message: message.into(),
        });
    }
}

pub fn lint_gha(config: &RawConfig) -> Result<LintReport, LintError> {
    if config.dialect != CiDialect::GitHubActions {
        return Err(LintError::WrongDialect {
            expected: CiDialect::GitHubActions,
            found: config.dialect,
        });
    }
    let mut sink = Sink::default();
    gha::check(config.root(), &mut sink);
    Ok(LintReport::new(CiDialect::GitHubActions, sink.0))
}

pub fn lint_travis(config: &RawConfig) -> Result<LintReport, LintError> {
    if config.dialect != CiDialect::TravisCI {
        return Err(LintError::WrongDialect {
            expected: CiDialect::TravisCI,
            found: config.dialect,
        });
    }
    let mut sink = Sink::default();
    travis::check(config.root(), &mut sink);
    Ok(LintReport::new(CiDialect::TravisCI, sink.0))
}

/// Lints with whichever linter matches the config's dialect.
pub fn lint(config: &RawConfig) -> LintReport {
    match config.dialect {
        CiDialect::GitHubActions => lint_gha(config),
        CiDialect::TravisCI => lint_travis(config),
    }
    .expect("linter chosen by dialect")
}
