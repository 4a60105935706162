use std::collections::HashMap;
use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;

use super::ir::*;
use super::{
    check_dialect, format_assignments, parse_assignments, slug, unique_id, TranslateError, Warner,
};
use crate::config::{CiDialect, Mapping, ScalarKind, YamlNode, YamlPath};
use crate::normalize::{normalize_document, NormalizedConfig};

/// Phases that become run steps, in execution order.
const RUN_PHASES: [(&str, Option<StepCondition>); 7] = [
    ("before_install", None),
    ("install", None),
    ("before_script", None),
    ("script", None),
    ("after_success", Some(StepCondition::OnSuccess)),
    ("after_failure", Some(StepCondition::OnFailure)),
    ("after_script", Some(StepCondition::Always)),
];

/// Keys whose presence makes a config a runnable pipeline.
const CONTENT_KEYS: [&str; 4] = ["before_install", "install", "before_script", "script"];

/// Keys handled at the pipeline level rather than per job.
const PIPELINE_KEYS: [&str; 5] = ["branches", "jobs", "matrix", "stages", "import"];

const NO_EQUIVALENT_KEYS: [&str; 5] = [
    "before_cache",
    "before_deploy",
    "deploy",
    "after_deploy",
    "notifications",
];

/// Languages whose toolchain is already present on a hosted runner.
const NO_SETUP_LANGUAGES: [&str; 8] = ["c", "cpp", "c++", "generic", "minimal", "shell", "bash", "sh"];

const DEFAULT_STAGE: &str = "test";

static JDK_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:open|oracle)jdk-?(\d+)$").unwrap());
static DIGITS_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+$").unwrap());

/// Ubuntu release numbers and the Travis `dist` codenames they correspond to.
const UBUNTU_DISTS: [(&str, &str); 5] = [
    ("16.04", "xenial"),
    ("18.04", "bionic"),
    ("20.04", "focal"),
    ("22.04", "jammy"),
    ("24.04", "noble"),
];

fn travis_language(name: &str) -> Option<Language> {
    match name {
        "java" => Some(Language::Java),
        "node_js" => Some(Language::Node),
        "python" => Some(Language::Python),
        "go" => Some(Language::Go),
        "rust" => Some(Language::Rust),
        _ => None,
    }
}

fn language_name(language: Language) -> &'static str {
    match language {
        Language::Java => "java",
        Language::Node => "node_js",
        Language::Python => "python",
        Language::Go => "go",
        Language::Rust => "rust",
    }
}

fn version_key(language: Language) -> &'static str {
    match language {
        Language::Java => "jdk",
        Language::Node => "node_js",
        Language::Python => "python",
        Language::Go => "go",
        Language::Rust => "rust",
    }
}

fn version_key_language(key: &str) -> Option<Language> {
    Language::ALL.into_iter().find(|l| version_key(*l) == key)
}

/// `openjdk11` → `11`; other languages keep their version text.
fn version_from_travis(language: Language, text: &str) -> String {
    if language == Language::Java {
        if let Some(c) = JDK_RE.captures(text) {
            return c[1].to_string();
        }
    }
    text.to_string()
}

fn version_to_travis(language: Language, version: &str) -> String {
    if language == Language::Java && DIGITS_RE.is_match(version) {
        format!("openjdk{version}")
    } else {
        version.to_string()
    }
}

fn travis_os(name: &str) -> Option<RunnerOs> {
    match name {
        "linux" => Some(RunnerOs::Linux),
        "osx" | "macos" => Some(RunnerOs::MacOS),
        "windows" => Some(RunnerOs::Windows),
        _ => None,
    }
}

fn os_to_travis(os: RunnerOs) -> &'static str {
    match os {
        RunnerOs::Linux => "linux",
        RunnerOs::MacOS => "osx",
        RunnerOs::Windows => "windows",
    }
}

/// One job-level key together with where it came from.
#[derive(Clone)]
struct Field<'a> {
    node: &'a YamlNode,
    path: YamlPath,
    /// Emit warnings for this key (false when inherited from the root).
    loud: bool,
    from_root: bool,
}

type Fields<'a> = IndexMap<&'a str, Field<'a>>;

/// Items of a scalar-or-list node, each with its own path.
fn items_of<'a>(node: &'a YamlNode, path: &YamlPath) -> Vec<(&'a YamlNode, YamlPath)> {
    match node {
        YamlNode::Sequence(items) => items
            .iter()
            .enumerate()
            .map(|(i, n)| (n, path.index(i)))
            .collect(),
        other => vec![(other, path.clone())],
    }
}

fn is_axis(node: &YamlNode) -> bool {
    node.as_sequence().is_some_and(|s| s.len() > 1)
}

struct LoweredJob {
    job: JobIR,
    global_env: IndexMap<String, String>,
}

fn lower_job(id: &str, fields: &Fields<'_>, w: &mut Warner) -> LoweredJob {
    let mut job = JobIR::new(id);
    let mut global_env = IndexMap::new();
    let mut setup: Option<StepIR> = None;
    let mut cache_paths: Vec<String> = Vec::new();
    let mut packages: Vec<String> = Vec::new();
    let mut phases: Vec<Vec<String>> = vec![Vec::new(); RUN_PHASES.len()];

    let language = fields.get("language").and_then(|f| {
        let name = f.node.scalar_text();
        let language = name.and_then(travis_language);
        if language.is_none() && !name.is_some_and(|n| NO_SETUP_LANGUAGES.contains(&n)) {
            w.warn(
                f.loud,
                WarningCode::NoEquivalent,
                &f.path,
                format!("language `{}` has no setup action mapping", name.unwrap_or("")),
            );
        }
        language
    });
    if let Some(language) = language {
        setup = Some(StepIR::new(StepKind::SetupLanguage {
            language,
            version: None,
        }));
    }

    for (&key, f) in fields {
        let (loud, path) = (f.loud, &f.path);
        if key == "language" {
            continue;
        }
        if let Some(key_language) = version_key_language(key) {
            if Some(key_language) != language {
                w.warn(
                    loud,
                    WarningCode::DroppedKey,
                    path,
                    format!("`{key}` does not apply to the configured language"),
                );
                continue;
            }
            let values: Vec<String> = items_of(f.node, path)
                .into_iter()
                .filter_map(|(n, _)| n.scalar_text())
                .map(|t| version_from_travis(key_language, t))
                .collect();
            if values.is_empty() || f.node.as_mapping().is_some() {
                w.warn(loud, WarningCode::DroppedKey, path, format!("`{key}` has no usable version"));
                continue;
            }
            if key_language == Language::Java {
                w.warn(
                    loud,
                    WarningCode::ApproxRunner,
                    path,
                    "JDK provided by setup-java with the Temurin distribution",
                );
            }
            let version = if values.len() == 1 {
                VersionRef::Literal(values[0].clone())
            } else {
                let dim = key_language.dimension().to_string();
                job.matrix
                    .dimensions
                    .insert(dim.clone(), values.into_iter().map(MatrixValue::Scalar).collect());
                VersionRef::Matrix(dim)
            };
            setup = Some(StepIR::new(StepKind::SetupLanguage {
                language: key_language,
                version: Some(version),
            }));
            continue;
        }
        match key {
            "os" => lower_os(f, &mut job, w),
            "dist" => {
                w.warn(
                    loud,
                    WarningCode::ApproxRunner,
                    path,
                    "`dist` is approximated by the latest hosted Ubuntu runner",
                );
                job.runner_version = f.node.scalar_text().map(str::to_string);
            }
            "osx_image" | "arch" => w.warn(
                loud,
                WarningCode::ApproxRunner,
                path,
                format!("`{key}` has no hosted-runner equivalent; default image used"),
            ),
            "env" => {
                let env = lower_env(f, w);
                global_env.extend(env.global);
                job.env.extend(env.fixed);
                if env.axis.len() > 1 {
                    job.matrix.dimensions.insert(
                        "env".to_string(),
                        env.axis.into_iter().map(MatrixValue::Assignments).collect(),
                    );
                } else if let Some(only) = env.axis.into_iter().next() {
                    job.env.extend(only);
                }
            }
            "cache" => lower_cache(f, &mut cache_paths, w),
            "addons" => lower_addons(f, &mut packages, w),
            "services" => {
                for (item, at) in items_of(f.node, path) {
                    match item.scalar_text() {
                        Some("docker") => w.warn(
                            loud,
                            WarningCode::DroppedKey,
                            &at,
                            "docker is preinstalled on hosted runners",
                        ),
                        Some(name) => w.warn(
                            loud,
                            WarningCode::NoEquivalent,
                            &at,
                            format!("service `{name}` has no direct equivalent"),
                        ),
                        None => w.warn(loud, WarningCode::DroppedKey, &at, "unrecognized service entry"),
                    }
                }
            }
            _ => {
                if let Some(i) = RUN_PHASES.iter().position(|(p, _)| *p == key) {
                    phases[i] = phase_commands(f, w);
                } else if NO_EQUIVALENT_KEYS.contains(&key) {
                    w.warn(loud, WarningCode::NoEquivalent, path, format!("`{key}` has no equivalent"));
                } else {
                    w.warn(loud, WarningCode::DroppedKey, path, format!("`{key}` has no mapping"));
                }
            }
        }
    }

    job.steps.push(StepIR::new(StepKind::Checkout));
    job.steps.extend(setup);
    if !cache_paths.is_empty() {
        job.steps.push(StepIR::new(StepKind::Cache {
            paths: cache_paths,
            key: format!("cache-{id}"),
        }));
    }
    if !packages.is_empty() {
        job.steps.push(StepIR::new(StepKind::PackageInstall(packages)));
    }
    for ((_, condition), commands) in RUN_PHASES.iter().zip(phases) {
        job.steps
            .extend(commands.into_iter().map(|c| StepIR::run(c).with_condition(*condition)));
    }
    LoweredJob { job, global_env }
}

fn lower_os(f: &Field<'_>, job: &mut JobIR, w: &mut Warner) {
    let mut found: Vec<RunnerOs> = Vec::new();
    for (item, at) in items_of(f.node, &f.path) {
        let os = match item.scalar_text().and_then(travis_os) {
            Some(os) => os,
            None => {
                w.warn(
                    f.loud,
                    WarningCode::ApproxRunner,
                    &at,
                    format!("os `{}` runs on Linux", item.scalar_text().unwrap_or("")),
                );
                RunnerOs::Linux
            }
        };
        if !found.contains(&os) {
            found.push(os);
        }
    }
    if let Some(first) = found.first() {
        job.runner_os = *first;
    }
    if found.len() > 1 {
        job.matrix.dimensions.insert(
            "os".to_string(),
            found
                .iter()
                .map(|os| MatrixValue::Scalar(os.ir_name().to_string()))
                .collect(),
        );
    }
}

struct LoweredEnv {
    global: IndexMap<String, String>,
    fixed: IndexMap<String, String>,
    axis: Vec<IndexMap<String, String>>,
}

/// Assignments from one `env` entry: `"A=1 B=2"` or a `{A: 1}` mapping.
fn env_entry(node: &YamlNode, path: &YamlPath, loud: bool, w: &mut Warner) -> Option<IndexMap<String, String>> {
    match node {
        YamlNode::Scalar(_) => {
            let parsed = node.scalar_text().and_then(parse_assignments);
            if parsed.is_none() {
                w.warn(loud, WarningCode::DroppedKey, path, "not a `NAME=value` assignment");
            }
            parsed
        }
        YamlNode::Mapping(m) if m.contains_key("secure") => {
            w.warn(
                loud,
                WarningCode::NoEquivalent,
                path,
                "encrypted variable must be re-created as a repository secret",
            );
            None
        }
        YamlNode::Mapping(m) if !m.is_empty() && m.values().all(|v| v.as_scalar().is_some()) => Some(
            m.iter()
                .map(|(k, v)| (k.clone(), v.scalar_text().unwrap_or("").to_string()))
                .collect(),
        ),
        _ => {
            w.warn(loud, WarningCode::DroppedKey, path, "unrecognized env entry");
            None
        }
    }
}

fn env_list(node: &YamlNode, path: &YamlPath, loud: bool, w: &mut Warner) -> Vec<IndexMap<String, String>> {
    items_of(node, path)
        .into_iter()
        .filter_map(|(n, at)| env_entry(n, &at, loud, w))
        .collect()
}

fn lower_env(f: &Field<'_>, w: &mut Warner) -> LoweredEnv {
    let mut env = LoweredEnv {
        global: IndexMap::new(),
        fixed: IndexMap::new(),
        axis: Vec::new(),
    };
    match f.node {
        YamlNode::Mapping(m) => {
            for (key, value) in m {
                let at = f.path.key(key);
                match key.as_str() {
                    "global" => {
                        let target = if f.from_root { &mut env.global } else { &mut env.fixed };
                        for entry in env_list(value, &at, f.loud, w) {
                            target.extend(entry);
                        }
                    }
                    "jobs" | "matrix" => env.axis.extend(env_list(value, &at, f.loud, w)),
                    _ => w.warn(f.loud, WarningCode::DroppedKey, &at, format!("`env.{key}` has no mapping")),
                }
            }
        }
        node => env.axis = env_list(node, &f.path, f.loud, w),
    }
    env
}

fn lower_cache(f: &Field<'_>, paths: &mut Vec<String>, w: &mut Warner) {
    let mut directories = |node: &YamlNode, at: &YamlPath, w: &mut Warner| {
        match node.string_list() {
            Some(dirs) if !dirs.is_empty() => {
                w.warn(
                    f.loud,
                    WarningCode::NoEquivalent,
                    at,
                    "cache key is static per job; no lockfile hashing",
                );
                paths.extend(dirs);
            }
            _ => w.warn(f.loud, WarningCode::DroppedKey, at, "`directories` must list paths"),
        }
    };
    for (item, at) in items_of(f.node, &f.path) {
        match item {
            YamlNode::Mapping(m) => {
                for (key, value) in m {
                    let sub = at.key(key);
                    if key == "directories" {
                        directories(value, &sub, w);
                    } else {
                        w.warn(
                            f.loud,
                            WarningCode::NoEquivalent,
                            &sub,
                            format!("`{key}` cache has no direct equivalent"),
                        );
                    }
                }
            }
            YamlNode::Scalar(s) if s.kind == ScalarKind::Bool => {
                w.warn(f.loud, WarningCode::DroppedKey, &at, "cache toggle has no equivalent")
            }
            _ => w.warn(
                f.loud,
                WarningCode::NoEquivalent,
                &at,
                format!("`{}` cache has no direct equivalent", item.scalar_text().unwrap_or("")),
            ),
        }
    }
}

fn lower_addons(f: &Field<'_>, packages: &mut Vec<String>, w: &mut Warner) {
    let Some(addons) = f.node.as_mapping() else {
        w.warn(f.loud, WarningCode::DroppedKey, &f.path, "`addons` must be a mapping");
        return;
    };
    for (key, value) in addons {
        let at = f.path.key(key);
        if key != "apt" {
            w.warn(f.loud, WarningCode::NoEquivalent, &at, format!("addon `{key}` has no equivalent"));
            continue;
        }
        match value {
            YamlNode::Mapping(apt) => {
                for (apt_key, apt_value) in apt {
                    let sub = at.key(apt_key);
                    match (apt_key.as_str(), apt_value.string_list()) {
                        ("packages", Some(list)) => packages.extend(list),
                        ("packages", None) => {
                            w.warn(f.loud, WarningCode::DroppedKey, &sub, "packages must be names")
                        }
                        _ => w.warn(
                            f.loud,
                            WarningCode::NoEquivalent,
                            &sub,
                            format!("apt `{apt_key}` has no equivalent"),
                        ),
                    }
                }
            }
            other => match other.string_list() {
                Some(list) if other.as_bool().is_none() => packages.extend(list),
                _ => w.warn(f.loud, WarningCode::DroppedKey, &at, "unrecognized apt addon"),
            },
        }
    }
}

fn phase_commands(f: &Field<'_>, w: &mut Warner) -> Vec<String> {
    let mut commands = Vec::new();
    match f.node {
        YamlNode::Scalar(s) if s.kind == ScalarKind::Bool || s.text == "skip" => {
            w.warn(f.loud, WarningCode::DroppedKey, &f.path, "phase is disabled");
        }
        YamlNode::Mapping(_) => {
            w.warn(f.loud, WarningCode::DroppedKey, &f.path, "phase must be a command list");
        }
        node => {
            for (item, at) in items_of(node, &f.path) {
                match item.scalar_text() {
                    Some(c) if !c.trim().is_empty() => commands.push(c.to_string()),
                    _ if item.is_null() => {}
                    _ => w.warn(f.loud, WarningCode::DroppedKey, &at, "not a command"),
                }
            }
        }
    }
    commands
}

/// Keys an include entry may carry while still only extending the matrix.
fn is_matrix_entry(entry: &Mapping, language: Option<Language>) -> bool {
    !entry.is_empty()
        && entry.iter().all(|(k, v)| {
            v.as_scalar().is_some()
                && (k == "os" || k == "env" || language.is_some_and(|l| version_key(l) == k))
        })
}

fn matrix_entry(
    entry: &Mapping,
    path: &YamlPath,
    language: Option<Language>,
    selector: bool,
    w: &mut Warner,
) -> MatrixEntry {
    let mut out = MatrixEntry::new();
    for (key, value) in entry {
        let at = path.key(key);
        let text = value.scalar_text();
        match (key.as_str(), text) {
            ("os", Some(t)) => {
                let os = travis_os(t).unwrap_or_else(|| {
                    w.warn(true, WarningCode::ApproxRunner, &at, format!("os `{t}` runs on Linux"));
                    RunnerOs::Linux
                });
                out.insert("os".into(), MatrixValue::Scalar(os.ir_name().into()));
            }
            ("env", Some(t)) => match parse_assignments(t) {
                Some(a) => {
                    out.insert("env".into(), MatrixValue::Assignments(a));
                }
                None => w.warn(true, WarningCode::DroppedKey, &at, "not a `NAME=value` assignment"),
            },
            (k, Some(t)) if language.is_some_and(|l| version_key(l) == k) => {
                let l = language.unwrap();
                if l == Language::Java && !selector {
                    w.warn(
                        true,
                        WarningCode::ApproxRunner,
                        &at,
                        "JDK provided by setup-java with the Temurin distribution",
                    );
                }
                out.insert(l.dimension().into(), MatrixValue::Scalar(version_from_travis(l, t)));
            }
            _ => w.warn(true, WarningCode::DroppedKey, &at, format!("`{key}` cannot select matrix jobs")),
        }
    }
    out
}

/// Turns literal values into one-value dimensions when include entries
/// vary them, so the entries add jobs instead of decorating existing ones.
fn promote_dimensions(job: &mut JobIR) {
    let keys: Vec<String> = job
        .matrix
        .include
        .iter()
        .flat_map(|e| e.keys().cloned())
        .collect();
    for key in keys {
        if job.matrix.dimensions.contains_key(&key) {
            continue;
        }
        if key == "os" {
            let value = MatrixValue::Scalar(job.runner_os.ir_name().into());
            job.matrix.dimensions.insert(key, vec![value]);
        } else if key == "env" {
            let value = MatrixValue::Assignments(std::mem::take(&mut job.env));
            job.matrix.dimensions.insert(key, vec![value]);
        } else if let Some(language) = Language::from_dimension(&key) {
            for step in &mut job.steps {
                if let StepKind::SetupLanguage {
                    language: l,
                    version: version @ Some(VersionRef::Literal(_)),
                } = &mut step.kind
                {
                    if *l == language {
                        let Some(VersionRef::Literal(v)) = version.take() else {
                            unreachable!()
                        };
                        *version = Some(VersionRef::Matrix(key.clone()));
                        job.matrix
                            .dimensions
                            .insert(key.clone(), vec![MatrixValue::Scalar(v)]);
                        break;
                    }
                }
            }
        }
    }
}

/// Resolves exclusion keys that are not matrix dimensions against the job's
/// fixed values. Returns `None` when the entry can match no combination;
/// an empty result matches every combination.
fn narrow_exclusion(job: &JobIR, entry: MatrixEntry) -> Option<MatrixEntry> {
    let mut remaining = MatrixEntry::new();
    for (key, value) in entry {
        if job.matrix.dimensions.contains_key(&key) {
            remaining.insert(key, value);
            continue;
        }
        let fixed = if key == "os" {
            Some(MatrixValue::Scalar(job.runner_os.ir_name().into()))
        } else if key == "env" {
            Some(MatrixValue::Assignments(job.env.clone()))
        } else {
            Language::from_dimension(&key).and_then(|language| {
                job.steps.iter().find_map(|s| match &s.kind {
                    StepKind::SetupLanguage {
                        language: l,
                        version: Some(VersionRef::Literal(v)),
                    } if *l == language => Some(MatrixValue::Scalar(v.clone())),
                    _ => None,
                })
            })
        };
        if fixed != Some(value) {
            return None;
        }
    }
    Some(remaining)
}

struct EntryJob<'a> {
    job: JobIR,
    name: Option<String>,
    stage: String,
    fields: Fields<'a>,
}

/// Applies the Travis lowering rules to a normalized Travis config.
pub fn lower_travis_to_ir(config: &NormalizedConfig) -> Result<PipelineIR, TranslateError> {
    check_dialect(config, CiDialect::TravisCI)?;
    let root = config.root();
    let top = YamlPath::root();
    let mut w = Warner::default();
    let mut ir = PipelineIR::default();

    let mut includes: Vec<(YamlPath, &Mapping)> = Vec::new();
    let mut excludes: Vec<(YamlPath, &YamlNode)> = Vec::new();
    let mut allow_failures: Vec<(YamlPath, &YamlNode)> = Vec::new();
    let section_key = if root.contains_key("jobs") { "jobs" } else { "matrix" };
    if section_key == "jobs" && root.contains_key("matrix") {
        w.warn(true, WarningCode::DroppedKey, &top.key("matrix"), "superseded by `jobs`");
    }
    if let Some(section) = root.get(section_key) {
        let section_path = top.key(section_key);
        let lists: Vec<(&str, &YamlNode, YamlPath)> = match section {
            YamlNode::Mapping(m) => {
                let mut lists = Vec::new();
                for (key, value) in m {
                    let at = section_path.key(key);
                    match key.as_str() {
                        "include" | "exclude" | "allow_failures" => lists.push((key.as_str(), value, at)),
                        "fast_finish" => w.warn(true, WarningCode::DroppedKey, &at, "fast_finish has no equivalent"),
                        _ => w.warn(true, WarningCode::DroppedKey, &at, format!("`{key}` has no mapping")),
                    }
                }
                lists
            }
            YamlNode::Sequence(_) => vec![("include", section, section_path.clone())],
            YamlNode::Scalar(_) => {
                w.warn(true, WarningCode::DroppedKey, &section_path, "job section must be a mapping");
                Vec::new()
            }
        };
        for (list, node, at) in lists {
            for (entry, entry_path) in items_of(node, &at) {
                match list {
                    "include" => match entry.as_mapping() {
                        Some(m) => includes.push((entry_path, m)),
                        None => w.warn(true, WarningCode::DroppedKey, &entry_path, "job entry must be a mapping"),
                    },
                    "exclude" => excludes.push((entry_path, entry)),
                    _ => allow_failures.push((entry_path, entry)),
                }
            }
        }
    }

    if !CONTENT_KEYS.iter().any(|k| root.contains_key(*k)) && includes.is_empty() {
        return Err(TranslateError::EmptyPipeline(
            "config defines no script, install or jobs".into(),
        ));
    }

    let root_fields: Fields<'_> = root
        .iter()
        .filter(|(k, _)| !PIPELINE_KEYS.contains(&k.as_str()))
        .map(|(k, v)| {
            (
                k.as_str(),
                Field {
                    node: v,
                    path: top.key(k),
                    loud: true,
                    from_root: true,
                },
            )
        })
        .collect();
    let language = root
        .get("language")
        .and_then(YamlNode::scalar_text)
        .and_then(travis_language);

    let job_defining = includes
        .iter()
        .filter(|(_, e)| !is_matrix_entry(e, language))
        .count();
    let root_axis = language.is_some_and(|l| root.get(version_key(l)).is_some_and(is_axis))
        || root.get("os").is_some_and(is_axis)
        || root.get("env").is_some_and(|e| {
            is_axis(e) || ["jobs", "matrix"].iter().any(|k| e.get(k).is_some_and(is_axis))
        });
    let root_exists = CONTENT_KEYS.iter().any(|k| root.contains_key(*k)) || root_axis || job_defining == 0;

    let mut taken: Vec<String> = Vec::new();
    let lowered = lower_job("build", &root_fields, &mut w);
    let mut root_job = lowered.job;
    ir.global_env = lowered.global_env;
    if root_exists {
        taken.push(root_job.id.clone());
    }

    let mut entry_jobs: Vec<EntryJob<'_>> = Vec::new();
    let mut stage_cursor = DEFAULT_STAGE.to_string();
    let mut uses_stages = false;
    for (path, entry) in &includes {
        if root_exists && is_matrix_entry(entry, language) {
            let converted = matrix_entry(entry, path, language, false, &mut w);
            root_job.matrix.include.push(converted);
            continue;
        }
        let mut fields: Fields<'_> = root_fields
            .iter()
            .map(|(k, f)| {
                let mut f = f.clone();
                f.loud = false;
                (*k, f)
            })
            .collect();
        let mut name = None;
        let mut allow_failure = false;
        for (key, value) in *entry {
            let at = path.key(key);
            match key.as_str() {
                "name" => name = value.scalar_text().map(str::to_string),
                "stage" => {
                    uses_stages = true;
                    if let Some(stage) = value.scalar_text() {
                        stage_cursor = stage.to_string();
                    }
                }
                "allow_failure" => match value.as_bool() {
                    Some(flag) => allow_failure = flag,
                    None => w.warn(true, WarningCode::DroppedKey, &at, "`allow_failure` must be a boolean"),
                },
                _ => {
                    fields.insert(
                        key.as_str(),
                        Field {
                            node: value,
                            path: at,
                            loud: true,
                            from_root: false,
                        },
                    );
                }
            }
        }
        let base = slug(name.as_deref().unwrap_or(if entry.contains_key("stage") {
            stage_cursor.as_str()
        } else {
            "job"
        }));
        let id = unique_id(&base, &mut taken);
        let mut job = lower_job(&id, &fields, &mut w).job;
        job.allow_failure = allow_failure;
        entry_jobs.push(EntryJob {
            job,
            name,
            stage: stage_cursor.clone(),
            fields,
        });
    }

    let mut root_exists = root_exists;
    if root_exists {
        promote_dimensions(&mut root_job);
    }
    for (path, node) in &excludes {
        match node.as_mapping() {
            Some(entry) if root_exists => {
                let converted = matrix_entry(entry, path, language, true, &mut w);
                match narrow_exclusion(&root_job, converted) {
                    Some(remaining) => root_job.matrix.exclude.push(remaining),
                    None => w.replace(WarningCode::DroppedKey, path, "entry excludes no job"),
                }
            }
            _ => w.warn(true, WarningCode::DroppedKey, path, "no build matrix to exclude from"),
        }
    }
    if root_exists && root_job.matrix.expand().is_empty() {
        // Exclusions removed every root combination.
        root_exists = false;
    }
    if !root_exists {
        // Without a root job, a root key only survives through inheritance.
        for (key, f) in &root_fields {
            if entry_jobs.iter().any(|ej| ej.fields.get(key).is_some_and(|e| e.from_root)) {
                continue;
            }
            let targets: Vec<YamlPath> = match f.node.as_mapping() {
                // `env.global` applies to every job regardless.
                Some(m) if *key == "env" => m.keys().filter(|k| *k != "global").map(|k| f.path.key(k)).collect(),
                _ => vec![f.path.clone()],
            };
            for target in targets {
                w.replace(WarningCode::DroppedKey, &target, "overridden by every job");
            }
        }
    }

    for (path, node) in &allow_failures {
        let Some(entry) = node.as_mapping() else {
            w.warn(true, WarningCode::DroppedKey, path, "allow_failures entry must be a mapping");
            continue;
        };
        let mut matched = false;
        if let Some(wanted) = entry.get("name").and_then(YamlNode::scalar_text) {
            for ej in entry_jobs.iter_mut().filter(|ej| ej.name.as_deref() == Some(wanted)) {
                ej.job.allow_failure = true;
                matched = true;
            }
            if !matched {
                w.warn(true, WarningCode::DroppedKey, path, format!("no job named `{wanted}`"));
            }
            continue;
        }
        for ej in &mut entry_jobs {
            let selects = entry
                .iter()
                .all(|(k, v)| ej.fields.get(k.as_str()).is_some_and(|f| f.node == v));
            if selects {
                ej.job.allow_failure = true;
                matched = true;
            }
        }
        if root_exists && is_matrix_entry(entry, language) {
            let converted = matrix_entry(entry, path, language, true, &mut w);
            root_job.matrix.allow_failures.push(converted);
        } else if !matched {
            w.warn(true, WarningCode::DroppedKey, path, "entry selects no job");
        }
    }

    let mut stage_order: Vec<String> = Vec::new();
    if let Some(stages) = root.get("stages") {
        let at = top.key("stages");
        for (item, item_path) in items_of(stages, &at) {
            match item {
                YamlNode::Scalar(_) => stage_order.extend(item.scalar_text().map(str::to_lowercase)),
                YamlNode::Mapping(m) if m.get("name").and_then(YamlNode::scalar_text).is_some() => {
                    stage_order.push(m["name"].scalar_text().unwrap().to_lowercase());
                    for key in m.keys().filter(|k| *k != "name") {
                        w.warn(
                            true,
                            WarningCode::NoEquivalent,
                            &item_path.key(key),
                            format!("stage `{key}` has no equivalent"),
                        );
                    }
                }
                _ => w.warn(true, WarningCode::DroppedKey, &item_path, "unrecognized stage entry"),
            }
        }
    }

    let mut jobs: Vec<(JobIR, String)> = Vec::new();
    if root_exists {
        jobs.push((root_job, DEFAULT_STAGE.to_string()));
    }
    jobs.extend(entry_jobs.into_iter().map(|ej| (ej.job, ej.stage)));

    if uses_stages {
        for (_, stage) in &jobs {
            let lowered = stage.to_lowercase();
            if !stage_order.contains(&lowered) {
                stage_order.push(lowered);
            }
        }
        let rank = |stage: &str| {
            stage_order
                .iter()
                .position(|s| *s == stage.to_lowercase())
                .unwrap_or(usize::MAX)
        };
        let mut ranks: Vec<usize> = jobs.iter().map(|(_, s)| rank(s)).collect();
        ranks.sort_unstable();
        ranks.dedup();
        let by_rank: HashMap<usize, Vec<String>> = ranks
            .iter()
            .map(|r| {
                let ids = jobs
                    .iter()
                    .filter(|(_, s)| rank(s) == *r)
                    .map(|(j, _)| j.id.clone())
                    .collect();
                (*r, ids)
            })
            .collect();
        for (job, stage) in &mut jobs {
            let position = ranks.iter().position(|r| *r == rank(stage)).unwrap();
            if position > 0 {
                job.needs = by_rank[&ranks[position - 1]].clone();
            }
            job.stage = Some(stage.clone());
        }
    }
    ir.jobs = jobs.into_iter().map(|(j, _)| j).collect();

    if let Some(branches) = root.get("branches") {
        lower_branches(branches, &top.key("branches"), &mut ir.triggers, &mut w);
    }
    if root.contains_key("import") {
        w.warn(
            true,
            WarningCode::ImportUnsupported,
            &top.key("import"),
            "shared config imports are not resolved",
        );
    }

    ir.warnings = w.warnings;
    Ok(ir)
}

fn lower_branches(node: &YamlNode, path: &YamlPath, triggers: &mut TriggerSpec, w: &mut Warner) {
    let take = |list: &YamlNode, at: &YamlPath, out: &mut Vec<String>, w: &mut Warner| {
        for (item, item_path) in items_of(list, at) {
            match item.scalar_text() {
                Some(b) if b.len() > 1 && b.starts_with('/') && b.ends_with('/') => w.warn(
                    true,
                    WarningCode::NoEquivalent,
                    &item_path,
                    "regular-expression branch filters have no equivalent",
                ),
                Some(b) => out.push(b.to_string()),
                None => w.warn(true, WarningCode::DroppedKey, &item_path, "branch must be a name"),
            }
        }
    };
    match node {
        YamlNode::Mapping(m) => {
            for (key, value) in m {
                let at = path.key(key);
                match key.as_str() {
                    "only" => take(value, &at, &mut triggers.branches, w),
                    "except" => take(value, &at, &mut triggers.branches_ignore, w),
                    _ => w.warn(true, WarningCode::DroppedKey, &at, format!("`branches.{key}` has no mapping")),
                }
            }
        }
        YamlNode::Sequence(_) => take(node, path, &mut triggers.branches, w),
        YamlNode::Scalar(_) => w.warn(true, WarningCode::DroppedKey, path, "`branches` must be a mapping"),
    }
}

// ---------------------------------------------------------------------------
// Raising

/// Branch globs (`release/**`) become the anchored regexes Travis expects.
fn branch_to_travis(pattern: &str) -> String {
    if !pattern.contains(['*', '?']) {
        return pattern.to_string();
    }
    let mut out = String::from("/^");
    let mut chars = pattern.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '*' if chars.next_if_eq(&'*').is_some() => out.push_str(".*"),
            '*' => out.push_str("[^/]*"),
            '?' => out.push_str("[^/]"),
            c => out.push_str(&regex::escape(&c.to_string())),
        }
    }
    out.push_str("$/");
    out
}

fn string_seq(items: &[String]) -> YamlNode {
    YamlNode::seq_of_strings(items.iter().cloned())
}

fn entry_to_travis(entry: &MatrixEntry) -> Mapping {
    let mut out = Mapping::new();
    for (key, value) in entry {
        match (key.as_str(), value) {
            ("os", MatrixValue::Scalar(v)) => {
                let os = RunnerOs::from_ir_name(v).unwrap_or(RunnerOs::Linux);
                out.insert("os".into(), YamlNode::string(os_to_travis(os)));
            }
            ("env", MatrixValue::Assignments(a)) => {
                out.insert("env".into(), YamlNode::string(format_assignments(a)));
            }
            (dim, MatrixValue::Scalar(v)) => {
                if let Some(l) = Language::from_dimension(dim) {
                    out.insert(version_key(l).into(), YamlNode::string(version_to_travis(l, v)));
                }
            }
            _ => {}
        }
    }
    out
}

fn dist_for(job: &JobIR) -> Option<String> {
    let hint = job.runner_version.as_deref()?;
    if job.runner_os != RunnerOs::Linux {
        return None;
    }
    UBUNTU_DISTS
        .iter()
        .find(|(number, codename)| hint == *number || hint == *codename)
        .map(|(_, codename)| codename.to_string())
}

/// Fields shared by the root form and `jobs.include` entries. `combo`
/// supplies concrete matrix values when the job is expanded into entries.
fn job_fields(job: &JobIR, combo: Option<&MatrixEntry>) -> Mapping {
    let mut out = Mapping::new();
    let dims = &job.matrix.dimensions;

    let setup = job.steps.iter().find_map(|s| match &s.kind {
        StepKind::SetupLanguage { language, version } => Some((*language, version)),
        _ => None,
    });
    match setup {
        Some((language, version)) => {
            out.insert("language".into(), YamlNode::string(language_name(language)));
            let key = version_key(language);
            match version {
                Some(VersionRef::Literal(v)) => {
                    out.insert(key.into(), YamlNode::string(version_to_travis(language, v)));
                }
                Some(VersionRef::Matrix(dim)) => match combo {
                    Some(c) => {
                        if let Some(MatrixValue::Scalar(v)) = c.get(dim) {
                            out.insert(key.into(), YamlNode::string(version_to_travis(language, v)));
                        }
                    }
                    None => {
                        let values: Vec<String> = dims
                            .get(dim)
                            .into_iter()
                            .flatten()
                            .filter_map(|v| match v {
                                MatrixValue::Scalar(s) => Some(version_to_travis(language, s)),
                                MatrixValue::Assignments(_) => None,
                            })
                            .collect();
                        if !values.is_empty() {
                            out.insert(key.into(), string_seq(&values));
                        }
                    }
                },
                None => {}
            }
        }
        None => {
            out.insert("language".into(), YamlNode::string("minimal"));
        }
    }

    let os_value = combo.and_then(|c| c.get("os"));
    match (os_value, dims.get("os"), combo) {
        (Some(MatrixValue::Scalar(v)), _, _) => {
            let os = RunnerOs::from_ir_name(v).unwrap_or(RunnerOs::Linux);
            out.insert("os".into(), YamlNode::string(os_to_travis(os)));
        }
        (_, Some(values), None) => {
            let names: Vec<String> = values
                .iter()
                .filter_map(|v| match v {
                    MatrixValue::Scalar(s) => RunnerOs::from_ir_name(s).map(|os| os_to_travis(os).to_string()),
                    MatrixValue::Assignments(_) => None,
                })
                .collect();
            out.insert("os".into(), string_seq(&names));
        }
        _ => {
            out.insert("os".into(), YamlNode::string(os_to_travis(job.runner_os)));
        }
    }
    if let Some(dist) = dist_for(job) {
        out.insert("dist".into(), YamlNode::string(dist));
    }

    let mut cache_dirs: Vec<String> = Vec::new();
    let mut packages: Vec<String> = Vec::new();
    for step in &job.steps {
        match &step.kind {
            StepKind::Cache { paths, .. } => {
                cache_dirs.extend(paths.iter().filter(|p| !cache_dirs.contains(p)).cloned().collect::<Vec<_>>())
            }
            StepKind::PackageInstall(p) => packages.extend(p.iter().cloned()),
            _ => {}
        }
    }
    if !cache_dirs.is_empty() {
        let mut cache = Mapping::new();
        cache.insert("directories".into(), string_seq(&cache_dirs));
        out.insert("cache".into(), YamlNode::Mapping(cache));
    }
    if !packages.is_empty() {
        let mut apt = Mapping::new();
        apt.insert("packages".into(), string_seq(&packages));
        let mut addons = Mapping::new();
        addons.insert("apt".into(), YamlNode::Mapping(apt));
        out.insert("addons".into(), YamlNode::Mapping(addons));
    }

    let runs: Vec<&StepIR> = job.steps.iter().filter(|s| s.command().is_some()).collect();
    let trailing_always = runs
        .iter()
        .rev()
        .take_while(|s| s.condition == Some(StepCondition::Always))
        .count();
    let mut script = Vec::new();
    let mut after_success = Vec::new();
    let mut after_failure = Vec::new();
    let mut after_script = Vec::new();
    for (i, step) in runs.iter().enumerate() {
        let command = step.command().unwrap().to_string();
        match step.condition {
            Some(StepCondition::OnSuccess) => after_success.push(command),
            Some(StepCondition::OnFailure) => after_failure.push(command),
            Some(StepCondition::Always) if i >= runs.len() - trailing_always => after_script.push(command),
            _ => script.push(command),
        }
    }
    for (key, list) in [
        ("script", script),
        ("after_success", after_success),
        ("after_failure", after_failure),
        ("after_script", after_script),
    ] {
        if !list.is_empty() {
            out.insert(key.into(), string_seq(&list));
        }
    }
    out
}

fn assignment_list(env: &IndexMap<String, String>) -> Vec<String> {
    env.iter()
        .map(|(k, v)| format_assignments(&IndexMap::from([(k.clone(), v.clone())])))
        .collect()
}

/// Depth of each job in the `needs` graph; cycles count as depth zero.
fn need_depths(ir: &PipelineIR) -> Vec<usize> {
    fn depth(ir: &PipelineIR, i: usize, memo: &mut Vec<Option<usize>>, visiting: &mut Vec<bool>) -> usize {
        if let Some(d) = memo[i] {
            return d;
        }
        if visiting[i] {
            return 0;
        }
        visiting[i] = true;
        let d = ir.jobs[i]
            .needs
            .iter()
            .filter_map(|n| ir.jobs.iter().position(|j| j.id == *n))
            .map(|j| depth(ir, j, memo, visiting) + 1)
            .max()
            .unwrap_or(0);
        visiting[i] = false;
        memo[i] = Some(d);
        d
    }
    let mut memo = vec![None; ir.jobs.len()];
    let mut visiting = vec![false; ir.jobs.len()];
    (0..ir.jobs.len())
        .map(|i| depth(ir, i, &mut memo, &mut visiting))
        .collect()
}

/// Emits a Travis config. A single plain job maps onto the root; anything
/// else becomes `jobs.include` entries, with `needs` layers as stages.
pub fn raise_ir_to_travis(ir: &PipelineIR) -> NormalizedConfig {
    let mut root = Mapping::new();
    let single = ir.jobs.len() == 1 && !ir.jobs[0].allow_failure;

    if single {
        let job = &ir.jobs[0];
        root.extend(job_fields(job, None));
        let mut global = ir.global_env.clone();
        global.extend(job.env.iter().map(|(k, v)| (k.clone(), v.clone())));
        let mut env = Mapping::new();
        if !global.is_empty() {
            env.insert("global".into(), string_seq(&assignment_list(&global)));
        }
        if let Some(values) = job.matrix.dimensions.get("env") {
            let list: Vec<String> = values
                .iter()
                .map(|v| match v {
                    MatrixValue::Assignments(a) => format_assignments(a),
                    MatrixValue::Scalar(s) => s.clone(),
                })
                .collect();
            env.insert("jobs".into(), string_seq(&list));
        }
        if !env.is_empty() {
            root.insert("env".into(), YamlNode::Mapping(env));
        }
        let mut jobs = Mapping::new();
        for (key, entries) in [
            ("include", &job.matrix.include),
            ("exclude", &job.matrix.exclude),
            ("allow_failures", &job.matrix.allow_failures),
        ] {
            if !entries.is_empty() {
                let list = entries.iter().map(|e| YamlNode::Mapping(entry_to_travis(e))).collect();
                jobs.insert(key.into(), YamlNode::Sequence(list));
            }
        }
        if !jobs.is_empty() {
            root.insert("jobs".into(), YamlNode::Mapping(jobs));
        }
    } else {
        if !ir.global_env.is_empty() {
            let mut env = Mapping::new();
            env.insert("global".into(), string_seq(&assignment_list(&ir.global_env)));
            root.insert("env".into(), YamlNode::Mapping(env));
        }
        let depths = need_depths(ir);
        let layers = depths.iter().copied().max().unwrap_or(0) + 1;
        let mut stage_names: Vec<String> = Vec::new();
        if layers > 1 {
            let mut taken = Vec::new();
            for layer in 0..layers {
                let members: Vec<&JobIR> = ir
                    .jobs
                    .iter()
                    .zip(&depths)
                    .filter(|(_, d)| **d == layer)
                    .map(|(j, _)| j)
                    .collect();
                let shared = members
                    .first()
                    .and_then(|j| j.stage.clone())
                    .filter(|s| members.iter().all(|j| j.stage.as_ref() == Some(s)));
                let base = shared.unwrap_or_else(|| {
                    members.first().map(|j| j.id.clone()).unwrap_or_else(|| format!("stage-{layer}"))
                });
                stage_names.push(unique_id(&base, &mut taken));
            }
            root.insert("stages".into(), string_seq(&stage_names));
        }

        let mut include = Vec::new();
        let mut allow = Vec::new();
        for (job, depth) in ir.jobs.iter().zip(&depths) {
            for combo in job.matrix.expand() {
                let mut entry = Mapping::new();
                entry.insert("name".into(), YamlNode::string(job.id.clone()));
                if layers > 1 {
                    entry.insert("stage".into(), YamlNode::string(stage_names[*depth].clone()));
                }
                entry.extend(job_fields(job, Some(&combo)));
                let mut env = job.env.clone();
                if let Some(MatrixValue::Assignments(a)) = combo.get("env") {
                    env.extend(a.iter().map(|(k, v)| (k.clone(), v.clone())));
                }
                if !env.is_empty() {
                    entry.insert("env".into(), YamlNode::string(format_assignments(&env)));
                }
                include.push(YamlNode::Mapping(entry));
            }
            if job.allow_failure {
                let mut entry = Mapping::new();
                entry.insert("name".into(), YamlNode::string(job.id.clone()));
                allow.push(YamlNode::Mapping(entry));
            }
            allow.extend(
                job.matrix
                    .allow_failures
                    .iter()
                    .map(|e| YamlNode::Mapping(entry_to_travis(e))),
            );
        }
        let mut jobs = Mapping::new();
        jobs.insert("include".into(), YamlNode::Sequence(include));
        if !allow.is_empty() {
            jobs.insert("allow_failures".into(), YamlNode::Sequence(allow));
        }
        root.insert("jobs".into(), YamlNode::Mapping(jobs));
    }

    let mut branches = Mapping::new();
    for (key, list) in [("only", &ir.triggers.branches), ("except", &ir.triggers.branches_ignore)] {
        if !list.is_empty() {
            let names: Vec<String> = list.iter().map(|b| branch_to_travis(b)).collect();
            branches.insert(key.into(), string_seq(&names));
        }
    }
    if !branches.is_empty() {
        root.insert("branches".into(), YamlNode::Mapping(branches));
    }

    normalize_document(CiDialect::TravisCI, &YamlNode::Mapping(root))
}
