//! Canonicalization, tokenization and feature categorization of configs.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::{serialize_node, CiDialect, Mapping, RawConfig, Scalar, ScalarKind, YamlNode};

/// A config with formatting noise removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedConfig {
    pub dialect: CiDialect,
    pub document: YamlNode,
    pub feature_set: BTreeSet<FeatureCategory>,
}

impl NormalizedConfig {
    /// Canonical YAML text of the normalized document.
    pub fn to_yaml(&self) -> String {
        serialize_node(&self.document)
    }

    pub fn root(&self) -> &Mapping {
        self.document
            .as_mapping()
            .expect("normalized root is always a mapping")
    }

    pub fn to_raw(&self) -> RawConfig {
        RawConfig::from_document(self.dialect, self.document.clone())
            .expect("normalized root is always a mapping")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureCategory {
    MatrixBuild,
    EnvironmentVariables,
    DeploymentSteps,
    Caching,
    Scripts,
    Triggers,
    OsTargets,
    Services,
    Addons,
    Notifications,
    Stages,
    Other,
}

const TRAVIS_KEY_ORDER: &[&str] = &[
    "language",
    "jdk",
    "node_js",
    "python",
    "go",
    "rust",
    "os",
    "dist",
    "env",
    "cache",
    "before_install",
    "install",
    "before_script",
    "script",
    "after_success",
    "after_failure",
    "after_script",
    "stages",
    "jobs",
    "matrix",
    "branches",
    "addons",
    "services",
    "notifications",
    "deploy",
];

const GHA_KEY_ORDER: &[&str] = &["name", "on", "env", "jobs"];

fn canonical_rank(dialect: CiDialect, key: &str) -> usize {
    let table = match dialect {
        CiDialect::TravisCI => TRAVIS_KEY_ORDER,
        CiDialect::GitHubActions => GHA_KEY_ORDER,
    };
    table
        .iter()
        .position(|k| *k == key)
        .unwrap_or(table.len())
}

/// A value that carries no meaning when present: null, `{}` or `[]`.
pub fn is_inert(node: &YamlNode) -> bool {
    match node {
        YamlNode::Scalar(s) => s.is_null(),
        YamlNode::Mapping(m) => m.is_empty(),
        YamlNode::Sequence(s) => s.is_empty(),
    }
}

/// Root keys whose empty or null values are meaningful and must survive
/// pruning (`on: {push: null}`, `permissions: {}`).
fn is_protected_root_key(dialect: CiDialect, key: &str) -> bool {
    dialect == CiDialect::GitHubActions && matches!(key, "on" | "permissions")
}

fn prune(node: &mut YamlNode) {
    match node {
        YamlNode::Mapping(m) => {
            for value in m.values_mut() {
                prune(value);
            }
            m.retain(|_, v| !is_inert(v));
        }
        YamlNode::Sequence(items) => items.iter_mut().for_each(prune),
        YamlNode::Scalar(s) => canonical_scalar(s),
    }
}

fn canonicalize_scalars(node: &mut YamlNode) {
    match node {
        YamlNode::Mapping(m) => m.values_mut().for_each(canonicalize_scalars),
        YamlNode::Sequence(items) => items.iter_mut().for_each(canonicalize_scalars),
        YamlNode::Scalar(s) => canonical_scalar(s),
    }
}

/// One spelling per null and boolean value (`~`/`Null` become empty,
/// `True` becomes `true`).
fn canonical_scalar(s: &mut Scalar) {
    match s.kind {
        ScalarKind::Null => s.text.clear(),
        ScalarKind::Bool => s.text.make_ascii_lowercase(),
        _ => {}
    }
}

fn prune_gha_job(job: &mut YamlNode) {
    let Some(m) = job.as_mapping_mut() else {
        prune(job);
        return;
    };
    for (key, value) in m.iter_mut() {
        if key == "permissions" {
            canonicalize_scalars(value);
        } else {
            prune(value);
        }
    }
    m.retain(|k, v| k == "permissions" || !is_inert(v));
}

fn canonicalize(dialect: CiDialect, document: &YamlNode) -> YamlNode {
    let Some(root) = document.as_mapping() else {
        return document.clone();
    };
    let mut out = Mapping::with_capacity(root.len());
    for (key, value) in root {
        let mut value = value.clone();
        if is_protected_root_key(dialect, key) {
            canonicalize_scalars(&mut value);
            out.insert(key.clone(), value);
            continue;
        }
        if dialect == CiDialect::GitHubActions && key == "jobs" {
            if let Some(jobs) = value.as_mapping_mut() {
                jobs.values_mut().for_each(prune_gha_job);
                jobs.retain(|_, v| !is_inert(v));
            } else {
                prune(&mut value);
            }
        } else {
            prune(&mut value);
        }
        if !is_inert(&value) {
            out.insert(key.clone(), value);
        }
    }
    // Keys outside the table share the last rank and sort alphabetically.
    out.sort_by(|ka, _, kb, _| {
        canonical_rank(dialect, ka)
            .cmp(&canonical_rank(dialect, kb))
            .then_with(|| ka.cmp(kb))
    });
    YamlNode::Mapping(out)
}

pub fn normalize(config: &RawConfig) -> NormalizedConfig {
    normalize_document(config.dialect, &config.document)
}

pub fn normalize_document(dialect: CiDialect, document: &YamlNode) -> NormalizedConfig {
    let document = canonicalize(dialect, document);
    let feature_set = categorize_document(dialect, &document);
    NormalizedConfig {
        dialect,
        document,
        feature_set,
    }
}

static TOKEN_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z0-9_.$/-]+").unwrap());

/// Ordered tokens drawn from the alphabet `[A-Za-z0-9_.$/-]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Wraps tokens, rejecting any that is empty or strays outside the alphabet.
    pub fn new(tokens: Vec<String>) -> Option<Self> {
        tokens
            .iter()
            .all(|t| TOKEN_RE.find(t).is_some_and(|m| m.len() == t.len()))
            .then_some(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

pub fn tokenize(text: &str) -> TokenSequence {
    TokenSequence(
        TOKEN_RE
            .find_iter(text)
            .map(|m| m.as_str().to_string())
            .collect(),
    )
}

fn travis_category(key: &str) -> FeatureCategory {
    use FeatureCategory::*;
    match key {
        "matrix" | "jobs" => MatrixBuild,
        "env" => EnvironmentVariables,
        "deploy" => DeploymentSteps,
        "cache" => Caching,
        "before_install" | "install" | "before_script" | "script" | "after_success"
        | "after_failure" | "after_script" => Scripts,
        "branches" => Triggers,
        "os" | "dist" => OsTargets,
        "services" => Services,
        "addons" => Addons,
        "notifications" => Notifications,
        "stages" => Stages,
        _ => Other,
    }
}

const DEPLOY_MARKERS: &[&str] = &["deploy", "publish", "release", "gh-pages", "build-push-action"];

/// The `owner/name` part of a `uses:` reference, without the `@version`.
pub fn action_name(uses: &str) -> &str {
    uses.split('@').next().unwrap_or(uses)
}

pub fn is_deployment_action(uses: &str) -> bool {
    let name = action_name(uses).to_ascii_lowercase();
    DEPLOY_MARKERS.iter().any(|m| name.contains(m))
}

pub fn is_cache_action(uses: &str) -> bool {
    matches!(
        action_name(uses),
        "actions/cache" | "actions/cache/restore" | "actions/cache/save"
    )
}

fn present<'a>(m: &'a Mapping, key: &str) -> Option<&'a YamlNode> {
    m.get(key).filter(|v| !is_inert(v))
}

fn gha_categories(root: &Mapping, out: &mut BTreeSet<FeatureCategory>) {
    use FeatureCategory::*;
    if root.contains_key("on") {
        out.insert(Triggers);
    }
    if present(root, "env").is_some() {
        out.insert(EnvironmentVariables);
    }
    let Some(jobs) = present(root, "jobs").and_then(YamlNode::as_mapping) else {
        return;
    };
    for job in jobs.values().filter_map(YamlNode::as_mapping) {
        if present(job, "runs-on").is_some() {
            out.insert(OsTargets);
        }
        if present(job, "env").is_some() {
            out.insert(EnvironmentVariables);
        }
        if present(job, "services").is_some() {
            out.insert(Services);
        }
        if present(job, "environment").is_some() {
            out.insert(DeploymentSteps);
        }
        if job
            .get("strategy")
            .and_then(|s| s.get("matrix"))
            .is_some_and(|m| !is_inert(m))
        {
            out.insert(MatrixBuild);
        }
        let steps = present(job, "steps")
            .and_then(YamlNode::as_sequence)
            .unwrap_or_default();
        for step in steps {
            if step.get("run").is_some_and(|r| !is_inert(r)) {
                out.insert(Scripts);
            }
            if let Some(uses) = step.get("uses").and_then(YamlNode::scalar_text) {
                if is_cache_action(uses) {
                    out.insert(Caching);
                }
                if is_deployment_action(uses) {
                    out.insert(DeploymentSteps);
                }
            }
        }
    }
}

/// Feature categories present in a document. `Other` is never reported, and
/// keys with null or empty values do not count.
pub fn categorize_document(dialect: CiDialect, document: &YamlNode) -> BTreeSet<FeatureCategory> {
    let mut out = BTreeSet::new();
    let Some(root) = document.as_mapping() else {
        return out;
    };
    match dialect {
        CiDialect::TravisCI => {
            for (key, value) in root {
                let cat = travis_category(key);
                if cat != FeatureCategory::Other && !is_inert(value) {
                    out.insert(cat);
                }
            }
        }
        CiDialect::GitHubActions => gha_categories(root, &mut out),
    }
    out
}

pub fn categorize_features(config: &RawConfig) -> BTreeSet<FeatureCategory> {
    categorize_document(config.dialect, &config.document)
}
