//! CI configuration documents: parsing, canonical serialization and dialect
//! detection.

mod emit;
mod node;
mod parse;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use emit::{double_quote, needs_quotes};
pub use node::{
    is_yaml11_bool, resolve_plain, Mapping, PathSegment, Scalar, ScalarKind, YamlNode, YamlPath,
};
pub use parse::parse_yaml;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CiDialect {
    #[serde(rename = "travis")]
    TravisCI,
    #[serde(rename = "gha")]
    GitHubActions,
}

impl CiDialect {
    pub fn other(self) -> CiDialect {
        match self {
            CiDialect::TravisCI => CiDialect::GitHubActions,
            CiDialect::GitHubActions => CiDialect::TravisCI,
        }
    }

    /// Short identifier used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            CiDialect::TravisCI => "travis",
            CiDialect::GitHubActions => "gha",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            CiDialect::TravisCI => "Travis CI",
            CiDialect::GitHubActions => "GitHub Actions",
        }
    }
}

impl fmt::Display for CiDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for CiDialect {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "travis" | "travis-ci" | "travisci" => Ok(CiDialect::TravisCI),
            "gha" | "github" | "github-actions" | "githubactions" => Ok(CiDialect::GitHubActions),
            _ => Err(ConfigError::UnknownDialect(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("E_YAML_SYNTAX: {message} (line {line}, column {column})")]
    YamlSyntax {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("E_MULTI_DOC: expected one YAML document, found {0}")]
    MultiDoc(usize),
    #[error("E_ROOT_NOT_MAPPING: document root must be a mapping ({0})")]
    RootNotMapping(&'static str),
    #[error("E_DUP_KEY: duplicate key `{key}` (line {line}, column {column})")]
    DuplicateKey {
        key: String,
        line: usize,
        column: usize,
    },
    #[error("E_UTF8: input is not valid UTF-8 (byte {offset})")]
    Utf8 { offset: usize },
    #[error("E_AMBIGUOUS_DIALECT: document carries neither Travis CI nor GitHub Actions signals")]
    AmbiguousDialect,
    #[error("E_UNKNOWN_DIALECT: `{0}` is not one of travis, gha")]
    UnknownDialect(String),
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::YamlSyntax { .. } => "E_YAML_SYNTAX",
            ConfigError::MultiDoc(_) => "E_MULTI_DOC",
            ConfigError::RootNotMapping(_) => "E_ROOT_NOT_MAPPING",
            ConfigError::DuplicateKey { .. } => "E_DUP_KEY",
            ConfigError::Utf8 { .. } => "E_UTF8",
            ConfigError::AmbiguousDialect => "E_AMBIGUOUS_DIALECT",
            ConfigError::UnknownDialect(_) => "E_UNKNOWN_DIALECT",
        }
    }
}

/// A parsed configuration document for one dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig {
    pub dialect: CiDialect,
    pub source_path: Option<PathBuf>,
    pub document: YamlNode,
    pub byte_length: usize,
}

impl RawConfig {
    /// Wraps an existing mapping document.
    pub fn from_document(dialect: CiDialect, document: YamlNode) -> Result<Self, ConfigError> {
        if document.as_mapping().is_none() {
            return Err(ConfigError::RootNotMapping(document.kind_name()));
        }
        Ok(Self {
            dialect,
            source_path: None,
            document,
            byte_length: 0,
        })
    }

    pub fn with_source_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.source_path = Some(path.into());
        self
    }

    pub fn root(&self) -> &Mapping {
        self.document
            .as_mapping()
            .expect("RawConfig root is always a mapping")
    }
}

fn decode(bytes: &[u8]) -> Result<&str, ConfigError> {
    std::str::from_utf8(bytes).map_err(|e| ConfigError::Utf8 {
        offset: e.valid_up_to(),
    })
}

fn parse_root(bytes: &[u8]) -> Result<YamlNode, ConfigError> {
    let document = parse_yaml(decode(bytes)?)?;
    if document.as_mapping().is_none() {
        return Err(ConfigError::RootNotMapping(document.kind_name()));
    }
    Ok(document)
}

pub fn parse_config(bytes: &[u8], dialect: CiDialect) -> Result<RawConfig, ConfigError> {
    Ok(RawConfig {
        dialect,
        source_path: None,
        document: parse_root(bytes)?,
        byte_length: bytes.len(),
    })
}

pub fn serialize_config(config: &RawConfig) -> Vec<u8> {
    serialize_node(&config.document).into_bytes()
}

/// Canonical YAML text for any node tree.
pub fn serialize_node(node: &YamlNode) -> String {
    emit::emit_document(node)
}

const TRAVIS_SIGNALS: [&str; 6] = ["language", "script", "install", "dist", "addons", "branches"];

fn contains_runs_on(node: &YamlNode) -> bool {
    match node {
        YamlNode::Mapping(m) => m
            .iter()
            .any(|(k, v)| k == "runs-on" || contains_runs_on(v)),
        YamlNode::Sequence(items) => items.iter().any(contains_runs_on),
        YamlNode::Scalar(_) => false,
    }
}

pub fn detect_dialect(bytes: &[u8]) -> Result<CiDialect, ConfigError> {
    let document = parse_root(bytes)?;
    let root = document.as_mapping().expect("checked above");

    let job_has_runs_on = root
        .get("jobs")
        .and_then(YamlNode::as_mapping)
        .is_some_and(|jobs| jobs.values().any(|job| job.get("runs-on").is_some()));
    if root.contains_key("jobs") && (root.contains_key("on") || job_has_runs_on) {
        return Ok(CiDialect::GitHubActions);
    }
    if TRAVIS_SIGNALS.iter().any(|k| root.contains_key(*k)) && !contains_runs_on(&document) {
        return Ok(CiDialect::TravisCI);
    }
    Err(ConfigError::AmbiguousDialect)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(c: &RawConfig) -> Vec<&str> {
        c.root().keys().map(String::as_str).collect()
    }

    #[test]
    fn parse_travis_language() {
        let c = parse_config(b"language: java", CiDialect::TravisCI).unwrap();
        assert_eq!(
            c.root().get("language"),
            Some(&YamlNode::Scalar(Scalar::new("java", ScalarKind::String)))
        );
        assert_eq!(c.byte_length, 14);
    }

    #[test]
    fn parse_keeps_key_order() {
        let c = parse_config(b"on: push\njobs: {}", CiDialect::GitHubActions).unwrap();
        assert_eq!(keys(&c), ["on", "jobs"]);
    }

    #[test]
    fn parse_errors() {
        let dup = parse_config(b"a: 1\na: 2", CiDialect::TravisCI).unwrap_err();
        assert_eq!(dup.code(), "E_DUP_KEY");
        let root = parse_config(b"- a\n- b\n", CiDialect::TravisCI).unwrap_err();
        assert_eq!(root.code(), "E_ROOT_NOT_MAPPING");
        let empty = parse_config(b"", CiDialect::TravisCI).unwrap_err();
        assert_eq!(empty.code(), "E_ROOT_NOT_MAPPING");
        let utf8 = parse_config(b"a: \xff\xfe", CiDialect::TravisCI).unwrap_err();
        assert_eq!(utf8, ConfigError::Utf8 { offset: 3 });
        let multi = parse_config(b"a: 1\n---\nb: 1\n", CiDialect::TravisCI).unwrap_err();
        assert_eq!(multi.code(), "E_MULTI_DOC");
        let syntax = parse_config(b"a: [1\n", CiDialect::TravisCI).unwrap_err();
        assert_eq!(syntax.code(), "E_YAML_SYNTAX");
    }

    #[test]
    fn serialize_examples() {
        let c = parse_config(b"language: \"java\"", CiDialect::TravisCI).unwrap();
        assert_eq!(serialize_config(&c), b"language: java\n");

        let c = parse_config(b"on: {push: {}}", CiDialect::GitHubActions).unwrap();
        assert_eq!(serialize_config(&c), b"on:\n  push: {}\n");

        let c = parse_config(b"answer: 'yes'", CiDialect::TravisCI).unwrap();
        assert_eq!(serialize_config(&c), b"answer: \"yes\"\n");
    }

    #[test]
    fn serialize_nested_sequences() {
        let src = "jobs:\n  b:\n    steps:\n      - uses: actions/checkout@v4\n      - run: |\n          mvn test\n          echo done\n";
        let c = parse_config(src.as_bytes(), CiDialect::GitHubActions).unwrap();
        let out = String::from_utf8(serialize_config(&c)).unwrap();
        assert_eq!(out, src);
        let again = parse_config(out.as_bytes(), CiDialect::GitHubActions).unwrap();
        assert_eq!(again.document, c.document);
    }

    #[test]
    fn detect_examples() {
        assert_eq!(
            detect_dialect(b"language: java\nscript: mvn test").unwrap(),
            CiDialect::TravisCI
        );
        assert_eq!(
            detect_dialect(b"on: push\njobs:\n  b:\n    runs-on: ubuntu-latest\n    steps: []")
                .unwrap(),
            CiDialect::GitHubActions
        );
        assert_eq!(
            detect_dialect(b"foo: bar").unwrap_err(),
            ConfigError::AmbiguousDialect
        );
    }

    #[test]
    fn detect_gha_wins_ties() {
        let src = b"language: java\njobs:\n  b:\n    runs-on: ubuntu-latest\n";
        assert_eq!(detect_dialect(src).unwrap(), CiDialect::GitHubActions);
        // runs-on anywhere disqualifies Travis.
        let src = b"language: java\nextra:\n  runs-on: x\n";
        assert_eq!(detect_dialect(src).unwrap_err(), ConfigError::AmbiguousDialect);
    }

    #[test]
    fn dialect_from_str() {
        assert_eq!("travis".parse::<CiDialect>().unwrap(), CiDialect::TravisCI);
        assert_eq!("GHA".parse::<CiDialect>().unwrap(), CiDialect::GitHubActions);
        assert_eq!("circle".parse::<CiDialect>().unwrap_err().code(), "E_UNKNOWN_DIALECT");
    }
}
