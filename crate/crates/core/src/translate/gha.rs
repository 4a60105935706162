use std::collections::HashMap;
use std::sync::LazyLock;

use indexmap::IndexMap;
use regex::Regex;

use super::ir::*;
use super::{check_dialect, TranslateError, Warner, APT_PREFIX, APT_STEP_NAME};
use crate::config::{CiDialect, Mapping, YamlNode, YamlPath};
use crate::normalize::{action_name, normalize_document, NormalizedConfig};

const WORKFLOW_NAME: &str = "CI";
const CHECKOUT: &str = "actions/checkout@v4";
const CACHE: &str = "actions/cache@v4";
/// Matrix key marking include entries whose jobs may fail.
const ALLOW_FAILURE_KEY: &str = "experimental";

static MATRIX_REF_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\$\{\{\s*matrix\.([A-Za-z0-9_-]+)\s*\}\}$").unwrap());
static MATRIX_FLAG_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\$\{\{\s*matrix\.([A-Za-z0-9_-]+)(?:\s*==\s*true)?\s*\}\}$").unwrap()
});
static MATRIX_ENV_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\$\{\{\s*matrix\.env\.([A-Za-z0-9_]+)\s*\}\}$").unwrap());
static CONDITION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:\$\{\{\s*)?(success|failure|always)\(\)(?:\s*\}\})?$").unwrap());

/// Setup action, its version input and the language it installs.
const SETUP_ACTIONS: [(&str, &str, Language); 5] = [
    ("actions/setup-java", "java-version", Language::Java),
    ("actions/setup-node", "node-version", Language::Node),
    ("actions/setup-python", "python-version", Language::Python),
    ("actions/setup-go", "go-version", Language::Go),
    ("dtolnay/rust-toolchain", "toolchain", Language::Rust),
];

fn setup_action(language: Language) -> (&'static str, &'static str) {
    match language {
        Language::Java => ("actions/setup-java@v4", "java-version"),
        Language::Node => ("actions/setup-node@v4", "node-version"),
        Language::Python => ("actions/setup-python@v5", "python-version"),
        Language::Go => ("actions/setup-go@v5", "go-version"),
        Language::Rust => ("dtolnay/rust-toolchain@master", "toolchain"),
    }
}

fn runner_label(os: RunnerOs) -> &'static str {
    match os {
        RunnerOs::Linux => "ubuntu-latest",
        RunnerOs::MacOS => "macos-latest",
        RunnerOs::Windows => "windows-latest",
    }
}

/// `ubuntu-22.04` → (Linux, Some("22.04")); `macos-latest` → (MacOS, None).
fn parse_label(label: &str) -> Option<(RunnerOs, Option<String>)> {
    let (family, version) = label.split_once('-')?;
    let os = match family {
        "ubuntu" => RunnerOs::Linux,
        "macos" => RunnerOs::MacOS,
        "windows" => RunnerOs::Windows,
        _ => return None,
    };
    let version = (version != "latest").then(|| version.to_string());
    Some((os, version))
}

fn matrix_ref(text: &str) -> Option<String> {
    MATRIX_REF_RE.captures(text).map(|c| c[1].to_string())
}

fn scalar_map(m: &Mapping) -> IndexMap<String, String> {
    m.iter()
        .filter_map(|(k, v)| v.scalar_text().map(|t| (k.clone(), t.to_string())))
        .collect()
}

/// Per-job facts gathered from steps and `runs-on` that decide how matrix
/// keys are interpreted.
#[derive(Default)]
struct MatrixUse {
    /// Matrix key → neutral dimension name.
    renames: HashMap<String, String>,
    os_key: Option<String>,
    allow_key: Option<String>,
}

impl MatrixUse {
    fn dimension(&self, key: &str) -> Option<String> {
        if self.os_key.as_deref() == Some(key) {
            return Some("os".to_string());
        }
        self.renames.get(key).cloned()
    }
}

fn matrix_value(
    dim: &str,
    node: &YamlNode,
    at: &YamlPath,
    w: &mut Warner,
) -> Option<MatrixValue> {
    match (dim, node) {
        ("env", YamlNode::Mapping(m)) => Some(MatrixValue::Assignments(scalar_map(m))),
        ("os", _) => {
            let label = node.scalar_text().unwrap_or("");
            let os = match parse_label(label) {
                Some((os, None)) => os,
                Some((os, Some(_))) if os == RunnerOs::Linux => os,
                Some((os, Some(_))) => {
                    w.warn(true, WarningCode::ApproxRunner, at, format!("runner `{label}` pinned to latest"));
                    os
                }
                None => {
                    w.warn(true, WarningCode::ApproxRunner, at, format!("runner `{label}` runs on Linux"));
                    RunnerOs::Linux
                }
            };
            Some(MatrixValue::Scalar(os.ir_name().to_string()))
        }
        (_, YamlNode::Scalar(_)) => node.scalar_text().map(|t| MatrixValue::Scalar(t.to_string())),
        _ => {
            w.warn(true, WarningCode::DroppedKey, at, "unsupported matrix value");
            None
        }
    }
}

fn matrix_entry(entry: &Mapping, at: &YamlPath, uses: &MatrixUse, w: &mut Warner) -> (MatrixEntry, bool) {
    let mut out = MatrixEntry::new();
    let mut allowed = false;
    for (key, value) in entry {
        let key_path = at.key(key);
        if uses.allow_key.as_deref() == Some(key.as_str()) {
            allowed = value.as_bool() == Some(true);
            continue;
        }
        let dim = uses
            .dimension(key)
            .or_else(|| (key == "env" && value.as_mapping().is_some()).then(|| "env".to_string()));
        match dim {
            Some(dim) => {
                if let Some(v) = matrix_value(&dim, value, &key_path, w) {
                    out.insert(dim, v);
                }
            }
            None => w.warn(
                true,
                WarningCode::NoEquivalent,
                &key_path,
                format!("matrix key `{key}` has no equivalent"),
            ),
        }
    }
    (out, allowed)
}

fn lower_matrix(node: &YamlNode, path: &YamlPath, uses: &MatrixUse, w: &mut Warner) -> MatrixIR {
    let mut matrix = MatrixIR::default();
    let Some(m) = node.as_mapping() else {
        w.warn(true, WarningCode::NoEquivalent, path, "computed matrix has no equivalent");
        return matrix;
    };
    for (key, value) in m {
        let at = path.key(key);
        match key.as_str() {
            "include" | "exclude" => {
                let Some(entries) = value.as_sequence() else {
                    w.warn(true, WarningCode::DroppedKey, &at, "entries must be a list");
                    continue;
                };
                for (i, entry) in entries.iter().enumerate() {
                    let Some(entry) = entry.as_mapping() else {
                        w.warn(true, WarningCode::DroppedKey, &at.index(i), "entry must be a mapping");
                        continue;
                    };
                    let (converted, allowed) = matrix_entry(entry, &at.index(i), uses, w);
                    if key == "exclude" {
                        matrix.exclude.push(converted);
                    } else if allowed {
                        matrix.allow_failures.push(converted);
                    } else {
                        matrix.include.push(converted);
                    }
                }
            }
            _ => {
                let Some(values) = value.as_sequence() else {
                    w.warn(true, WarningCode::DroppedKey, &at, "matrix values must be a list");
                    continue;
                };
                let is_env = key == "env" && values.iter().all(|v| v.as_mapping().is_some());
                let dim = uses.dimension(key).or_else(|| is_env.then(|| "env".to_string()));
                let Some(dim) = dim else {
                    w.warn(
                        true,
                        WarningCode::NoEquivalent,
                        &at,
                        format!("matrix key `{key}` has no equivalent"),
                    );
                    continue;
                };
                let converted: Vec<MatrixValue> = values
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| matrix_value(&dim, v, &at.index(i), w))
                    .collect();
                matrix.dimensions.insert(dim, converted);
            }
        }
    }
    matrix
}

fn lower_step(
    node: &YamlNode,
    path: &YamlPath,
    uses_info: &mut MatrixUse,
    w: &mut Warner,
) -> Option<StepIR> {
    let Some(step) = node.as_mapping() else {
        w.warn(true, WarningCode::DroppedKey, path, "step must be a mapping");
        return None;
    };
    let name = step.get("name").and_then(YamlNode::scalar_text).map(str::to_string);
    let run = step.get("run").and_then(YamlNode::scalar_text);
    let uses = step.get("uses").and_then(YamlNode::scalar_text);
    let inputs: IndexMap<String, String> = step
        .get("with")
        .and_then(YamlNode::as_mapping)
        .map(scalar_map)
        .unwrap_or_default();

    let mut consumed_inputs: Vec<&str> = Vec::new();
    let apt = name.as_deref() == Some(APT_STEP_NAME)
        && run.is_some_and(|r| r.starts_with(APT_PREFIX));
    let kind = if let Some(command) = run {
        if apt {
            let packages = command[APT_PREFIX.len()..]
                .split_whitespace()
                .map(str::to_string)
                .collect();
            StepKind::PackageInstall(packages)
        } else if command.trim().is_empty() {
            w.warn(true, WarningCode::DroppedKey, path, "empty run command");
            return None;
        } else {
            StepKind::Run(command.to_string())
        }
    } else if let Some(uses) = uses {
        let action = action_name(uses);
        if action == "actions/checkout" {
            StepKind::Checkout
        } else if let Some((_, input, language)) = SETUP_ACTIONS.iter().find(|(a, _, _)| *a == action) {
            consumed_inputs.push(input);
            let raw = inputs.get(*input).cloned().or_else(|| {
                let reference = uses.split_once('@').map(|(_, r)| r)?;
                (*language == Language::Rust && reference != "master").then(|| reference.to_string())
            });
            let version = raw.map(|v| match matrix_ref(&v) {
                Some(key) => {
                    uses_info.renames.insert(key.clone(), language.dimension().to_string());
                    VersionRef::Matrix(language.dimension().to_string())
                }
                None => VersionRef::Literal(v),
            });
            if *language == Language::Java && inputs.contains_key("distribution") {
                consumed_inputs.push("distribution");
                w.warn(
                    true,
                    WarningCode::ApproxRunner,
                    &path.key("with").key("distribution"),
                    "JDK distribution is chosen by the Travis image",
                );
            }
            StepKind::SetupLanguage {
                language: *language,
                version,
            }
        } else if action == "actions/cache" {
            consumed_inputs.extend(["path", "key"]);
            if inputs.contains_key("key") {
                w.warn(
                    true,
                    WarningCode::DroppedKey,
                    &path.key("with").key("key"),
                    "Travis derives cache keys itself",
                );
            }
            StepKind::Cache {
                paths: inputs
                    .get("path")
                    .map(|p| {
                        p.lines()
                            .map(str::trim)
                            .filter(|l| !l.is_empty())
                            .map(str::to_string)
                            .collect()
                    })
                    .unwrap_or_default(),
                key: inputs.get("key").cloned().unwrap_or_default(),
            }
        } else {
            w.warn(
                true,
                WarningCode::UnknownAction,
                path,
                format!("action `{uses}` has no equivalent"),
            );
            return Some(StepIR {
                kind: StepKind::UnmappedAction {
                    uses: uses.to_string(),
                    inputs,
                },
                condition: None,
                name,
            });
        }
    } else {
        w.warn(true, WarningCode::DroppedKey, path, "step has neither `run` nor `uses`");
        return None;
    };

    let mut condition = None;
    for (key, value) in step {
        let at = path.key(key);
        match key.as_str() {
            "run" => {}
            "uses" if run.is_some() => w.warn(true, WarningCode::DroppedKey, &at, "`run` takes precedence"),
            "uses" => {}
            "name" if apt => {}
            "name" => w.warn(true, WarningCode::DroppedKey, &at, "step names have no equivalent"),
            "if" => {
                let text = value.scalar_text().unwrap_or("");
                condition = match CONDITION_RE.captures(text.trim()).map(|c| c[1].to_string()).as_deref() {
                    Some("success") => Some(StepCondition::OnSuccess),
                    Some("failure") => Some(StepCondition::OnFailure),
                    Some("always") => Some(StepCondition::Always),
                    _ => {
                        w.warn(true, WarningCode::DroppedKey, &at, "step condition has no equivalent");
                        None
                    }
                }
            }
            "with" => match value.as_mapping() {
                Some(m) if uses.is_some() && run.is_none() => {
                    for k in m.keys().filter(|k| !consumed_inputs.contains(&k.as_str())) {
                        w.warn(
                            true,
                            WarningCode::DroppedKey,
                            &at.key(k),
                            format!("input `{k}` has no equivalent"),
                        );
                    }
                }
                _ => w.warn(true, WarningCode::DroppedKey, &at, "unused inputs"),
            },
            _ => w.warn(true, WarningCode::DroppedKey, &at, format!("step `{key}` has no equivalent")),
        }
    }
    let name = if apt { None } else { name };
    Some(StepIR { kind, condition, name })
}

fn lower_job(id: &str, job: &Mapping, path: &YamlPath, w: &mut Warner) -> Option<JobIR> {
    if job.get("uses").is_some() {
        w.warn(true, WarningCode::NoEquivalent, path, "reusable workflow calls have no equivalent");
        return None;
    }
    let mut ir = JobIR::new(id);
    let mut uses = MatrixUse::default();

    match job.get("runs-on") {
        Some(node) => {
            let at = path.key("runs-on");
            let label = node.scalar_text().unwrap_or("");
            if let Some(key) = matrix_ref(label) {
                uses.os_key = Some(key);
            } else {
                match parse_label(label) {
                    Some((os, version)) => {
                        ir.runner_os = os;
                        if os == RunnerOs::Linux {
                            ir.runner_version = version;
                        } else if version.is_some() {
                            w.warn(true, WarningCode::ApproxRunner, &at, format!("runner `{label}` pinned to latest"));
                        }
                    }
                    None => w.warn(true, WarningCode::ApproxRunner, &at, "runner approximated by Linux"),
                }
            }
        }
        None => w.warn(true, WarningCode::ApproxRunner, path, "job without `runs-on` runs on Linux"),
    }

    if let Some(flag) = job.get("continue-on-error") {
        let at = path.key("continue-on-error");
        match (flag.as_bool(), flag.scalar_text().and_then(|t| MATRIX_FLAG_RE.captures(t))) {
            (Some(b), _) => ir.allow_failure = b,
            (None, Some(c)) => uses.allow_key = Some(c[1].to_string()),
            _ => w.warn(true, WarningCode::DroppedKey, &at, "conditional failure policy has no equivalent"),
        }
    }

    let steps_path = path.key("steps");
    let mut seen_language = None;
    if let Some(steps) = job.get("steps").and_then(YamlNode::as_sequence) {
        for (i, node) in steps.iter().enumerate() {
            let at = steps_path.index(i);
            let Some(step) = lower_step(node, &at, &mut uses, w) else {
                continue;
            };
            if let StepKind::SetupLanguage { language, .. } = step.kind {
                match seen_language {
                    Some(first) if first != language => w.warn(
                        true,
                        WarningCode::NoEquivalent,
                        &at,
                        "only one language can be set up per Travis job",
                    ),
                    _ => seen_language = Some(language),
                }
            }
            ir.steps.push(step);
        }
    }
    if ir.steps.is_empty() {
        w.replace(WarningCode::DroppedKey, path, "job has no translatable steps");
        return None;
    }

    for (key, value) in job {
        let at = path.key(key);
        match key.as_str() {
            "runs-on" | "continue-on-error" | "steps" => {}
            "needs" => ir.needs = value.string_list().unwrap_or_default(),
            "strategy" => {
                let Some(strategy) = value.as_mapping() else {
                    w.warn(true, WarningCode::DroppedKey, &at, "`strategy` must be a mapping");
                    continue;
                };
                for (k, v) in strategy {
                    if k == "matrix" {
                        ir.matrix = lower_matrix(v, &at.key(k), &uses, w);
                    } else {
                        w.warn(true, WarningCode::DroppedKey, &at.key(k), format!("`{k}` has no equivalent"));
                    }
                }
            }
            "env" => match value.as_mapping() {
                Some(env) => {
                    for (name, v) in env {
                        let text = v.scalar_text().unwrap_or("");
                        if MATRIX_ENV_RE.captures(text).is_some_and(|c| &c[1] == name) {
                            continue;
                        }
                        ir.env.insert(name.clone(), text.to_string());
                    }
                }
                None => w.warn(true, WarningCode::DroppedKey, &at, "`env` must be a mapping"),
            },
            "services" | "container" => w.warn(
                true,
                WarningCode::NoEquivalent,
                &at,
                format!("job `{key}` has no direct equivalent"),
            ),
            _ => w.warn(true, WarningCode::DroppedKey, &at, format!("job `{key}` has no equivalent")),
        }
    }
    shadow_matrix_env(&mut ir, path, w);
    if !ir.matrix.is_empty() && ir.matrix.expand().is_empty() {
        w.replace(WarningCode::DroppedKey, path, "matrix excludes every combination");
        return None;
    }
    Some(ir)
}

/// A literal job `env` entry wins over an unreferenced `matrix.env` value of
/// the same name, so the matrix value is dropped.
fn shadow_matrix_env(ir: &mut JobIR, path: &YamlPath, w: &mut Warner) {
    let shadowed: Vec<String> = ir
        .matrix
        .env_names()
        .into_iter()
        .filter(|name| ir.env.contains_key(name))
        .collect();
    if shadowed.is_empty() {
        return;
    }
    let values = ir.matrix.dimensions.get_mut("env").into_iter().flatten();
    let entries = ir.matrix.include.iter_mut().filter_map(|e| e.get_mut("env"));
    for value in values.chain(entries) {
        if let MatrixValue::Assignments(a) = value {
            a.retain(|k, _| !shadowed.contains(k));
        }
    }
    w.warn(
        true,
        WarningCode::DroppedKey,
        &path.key("strategy").key("matrix").key("env"),
        format!("shadowed by job env: {}", shadowed.join(", ")),
    );
}

fn lower_triggers(node: &YamlNode, path: &YamlPath, triggers: &mut TriggerSpec, w: &mut Warner) {
    let event = |name: &str, at: &YamlPath, triggers: &mut TriggerSpec, w: &mut Warner| {
        if matches!(name, "push" | "pull_request") {
            triggers.events.push(name.to_string());
            true
        } else {
            w.warn(true, WarningCode::NoEquivalent, at, format!("`{name}` trigger has no equivalent"));
            false
        }
    };
    match node {
        YamlNode::Mapping(m) => {
            let mut filtered = false;
            for (name, config) in m {
                let at = path.key(name);
                if !event(name, &at, triggers, w) {
                    continue;
                }
                let Some(config) = config.as_mapping() else {
                    continue;
                };
                for (key, value) in config {
                    let key_at = at.key(key);
                    let target = match key.as_str() {
                        "branches" => Some(&mut triggers.branches),
                        "branches-ignore" => Some(&mut triggers.branches_ignore),
                        _ => None,
                    };
                    let list = value.string_list().unwrap_or_default();
                    match target {
                        Some(target) if !filtered || *target == list => {
                            if target.is_empty() {
                                *target = list;
                            }
                        }
                        Some(_) => w.warn(
                            true,
                            WarningCode::DroppedKey,
                            &key_at,
                            "per-event branch filters differ; the first event's filters apply",
                        ),
                        None => w.warn(true, WarningCode::DroppedKey, &key_at, format!("`{key}` filter has no equivalent")),
                    }
                }
                filtered |= config.contains_key("branches") || config.contains_key("branches-ignore");
            }
        }
        YamlNode::Sequence(items) => {
            for (i, item) in items.iter().enumerate() {
                event(item.scalar_text().unwrap_or(""), &path.index(i), triggers, w);
            }
        }
        YamlNode::Scalar(_) => {
            event(node.scalar_text().unwrap_or(""), path, triggers, w);
        }
    }
}

/// Applies the GitHub Actions lowering rules to a normalized workflow.
pub fn lower_gha_to_ir(config: &NormalizedConfig) -> Result<PipelineIR, TranslateError> {
    check_dialect(config, CiDialect::GitHubActions)?;
    let root = config.root();
    let top = YamlPath::root();
    let mut w = Warner::default();
    let mut ir = PipelineIR::default();

    let jobs = match root.get("jobs").and_then(YamlNode::as_mapping) {
        Some(jobs) if !jobs.is_empty() => jobs,
        _ => return Err(TranslateError::EmptyPipeline("workflow has no jobs".into())),
    };

    for (key, value) in root {
        let at = top.key(key);
        match key.as_str() {
            "jobs" => {}
            "on" => lower_triggers(value, &at, &mut ir.triggers, &mut w),
            "env" => match value.as_mapping() {
                Some(env) => ir.global_env = scalar_map(env),
                None => w.warn(true, WarningCode::DroppedKey, &at, "`env` must be a mapping"),
            },
            _ => w.warn(true, WarningCode::DroppedKey, &at, format!("`{key}` has no equivalent")),
        }
    }

    for (id, job) in jobs {
        let at = top.key("jobs").key(id);
        match job.as_mapping() {
            Some(job) => ir.jobs.extend(lower_job(id, job, &at, &mut w)),
            None => w.warn(true, WarningCode::DroppedKey, &at, "job must be a mapping"),
        }
    }
    if ir.jobs.is_empty() {
        return Err(TranslateError::EmptyPipeline("no translatable jobs".into()));
    }
    let ids: Vec<String> = ir.jobs.iter().map(|j| j.id.clone()).collect();
    for job in &mut ir.jobs {
        job.needs.retain(|n| ids.contains(n));
    }

    ir.warnings = w.warnings;
    Ok(ir)
}

// ---------------------------------------------------------------------------
// Raising

fn string_map(map: &IndexMap<String, String>) -> YamlNode {
    YamlNode::Mapping(
        map.iter()
            .map(|(k, v)| (k.clone(), YamlNode::string(v.clone())))
            .collect(),
    )
}

fn value_to_gha(dim: &str, value: &MatrixValue) -> YamlNode {
    match value {
        MatrixValue::Assignments(a) => string_map(a),
        MatrixValue::Scalar(s) if dim == "os" => {
            YamlNode::string(runner_label(RunnerOs::from_ir_name(s).unwrap_or(RunnerOs::Linux)))
        }
        MatrixValue::Scalar(s) => YamlNode::string(s.clone()),
    }
}

fn entry_to_gha(entry: &MatrixEntry) -> Mapping {
    entry
        .iter()
        .map(|(k, v)| (k.clone(), value_to_gha(k, v)))
        .collect()
}

fn step_to_gha(step: &StepIR, job_id: &str) -> Mapping {
    let mut out = Mapping::new();
    if let Some(name) = &step.name {
        out.insert("name".into(), YamlNode::string(name.clone()));
    }
    match &step.kind {
        StepKind::Checkout => {
            out.insert("uses".into(), YamlNode::string(CHECKOUT));
        }
        StepKind::SetupLanguage { language, version } => {
            let (action, input) = setup_action(*language);
            let mut with = Mapping::new();
            if *language == Language::Java {
                with.insert("distribution".into(), YamlNode::string("temurin"));
            }
            match version {
                Some(VersionRef::Literal(v)) => {
                    with.insert(input.into(), YamlNode::string(v.clone()));
                }
                Some(VersionRef::Matrix(dim)) => {
                    with.insert(input.into(), YamlNode::string(format!("${{{{ matrix.{dim} }}}}")));
                }
                None => {}
            }
            let action = if *language == Language::Rust && !with.contains_key(input) {
                "dtolnay/rust-toolchain@stable"
            } else {
                action
            };
            out.insert("uses".into(), YamlNode::string(action));
            out.insert("with".into(), YamlNode::Mapping(with));
        }
        StepKind::Cache { paths, key } => {
            let mut with = Mapping::new();
            with.insert("path".into(), YamlNode::string(paths.join("\n")));
            let key = if key.is_empty() {
                format!("cache-{job_id}")
            } else {
                key.clone()
            };
            with.insert("key".into(), YamlNode::string(key));
            out.insert("uses".into(), YamlNode::string(CACHE));
            out.insert("with".into(), YamlNode::Mapping(with));
        }
        StepKind::PackageInstall(packages) => {
            out.insert("name".into(), YamlNode::string(APT_STEP_NAME));
            out.insert(
                "run".into(),
                YamlNode::string(format!("{APT_PREFIX}{}", packages.join(" "))),
            );
        }
        StepKind::Run(command) => {
            out.insert("run".into(), YamlNode::string(command.clone()));
        }
        StepKind::UnmappedAction { uses, inputs } => {
            out.insert("uses".into(), YamlNode::string(uses.clone()));
            out.insert("with".into(), string_map(inputs));
        }
    }
    if let Some(condition) = step.condition {
        let expr = match condition {
            StepCondition::OnSuccess => "success()",
            StepCondition::OnFailure => "failure()",
            StepCondition::Always => "always()",
        };
        out.insert("if".into(), YamlNode::string(expr));
    }
    out
}

fn job_to_gha(job: &JobIR) -> Mapping {
    let mut out = Mapping::new();
    let matrix = &job.matrix;
    let runs_on = if matrix.mentions("os") {
        "${{ matrix.os }}".to_string()
    } else {
        runner_label(job.runner_os).to_string()
    };
    out.insert("runs-on".into(), YamlNode::string(runs_on));
    if !job.needs.is_empty() {
        out.insert("needs".into(), YamlNode::seq_of_strings(job.needs.iter().cloned()));
    }
    if job.allow_failure {
        out.insert("continue-on-error".into(), YamlNode::bool(true));
    } else if !matrix.allow_failures.is_empty() {
        out.insert(
            "continue-on-error".into(),
            YamlNode::string(format!("${{{{ matrix.{ALLOW_FAILURE_KEY} == true }}}}")),
        );
    }
    if !matrix.is_empty() {
        let mut m = Mapping::new();
        for (dim, values) in &matrix.dimensions {
            m.insert(
                dim.clone(),
                YamlNode::Sequence(values.iter().map(|v| value_to_gha(dim, v)).collect()),
            );
        }
        let mut include: Vec<YamlNode> = matrix
            .include
            .iter()
            .map(|e| YamlNode::Mapping(entry_to_gha(e)))
            .collect();
        include.extend(matrix.allow_failures.iter().map(|e| {
            let mut entry = entry_to_gha(e);
            entry.insert(ALLOW_FAILURE_KEY.into(), YamlNode::bool(true));
            YamlNode::Mapping(entry)
        }));
        if !include.is_empty() {
            m.insert("include".into(), YamlNode::Sequence(include));
        }
        if !matrix.exclude.is_empty() {
            let exclude = matrix
                .exclude
                .iter()
                .map(|e| YamlNode::Mapping(entry_to_gha(e)))
                .collect();
            m.insert("exclude".into(), YamlNode::Sequence(exclude));
        }
        let mut strategy = Mapping::new();
        strategy.insert("matrix".into(), YamlNode::Mapping(m));
        out.insert("strategy".into(), YamlNode::Mapping(strategy));
    }
    let mut env: Mapping = job
        .env
        .iter()
        .map(|(k, v)| (k.clone(), YamlNode::string(v.clone())))
        .collect();
    for name in matrix.env_names() {
        env.insert(
            name.clone(),
            YamlNode::string(format!("${{{{ matrix.env.{name} }}}}")),
        );
    }
    if !env.is_empty() {
        out.insert("env".into(), YamlNode::Mapping(env));
    }
    let steps = job
        .steps
        .iter()
        .map(|s| YamlNode::Mapping(step_to_gha(s, &job.id)))
        .collect();
    out.insert("steps".into(), YamlNode::Sequence(steps));
    out
}

fn triggers_to_gha(triggers: &TriggerSpec) -> YamlNode {
    let events: Vec<String> = if triggers.events.is_empty() {
        vec!["push".into(), "pull_request".into()]
    } else {
        triggers.events.clone()
    };
    if triggers.branches.is_empty() && triggers.branches_ignore.is_empty() {
        return YamlNode::seq_of_strings(events);
    }
    let mut filters = Mapping::new();
    if !triggers.branches.is_empty() {
        filters.insert("branches".into(), YamlNode::seq_of_strings(triggers.branches.iter().cloned()));
    }
    if !triggers.branches_ignore.is_empty() {
        filters.insert(
            "branches-ignore".into(),
            YamlNode::seq_of_strings(triggers.branches_ignore.iter().cloned()),
        );
    }
    YamlNode::Mapping(
        events
            .into_iter()
            .map(|e| (e, YamlNode::Mapping(filters.clone())))
            .collect(),
    )
}

/// Emits a GitHub Actions workflow for `ir`.
pub fn raise_ir_to_gha(ir: &PipelineIR) -> NormalizedConfig {
    let mut root = Mapping::new();
    root.insert("name".into(), YamlNode::string(WORKFLOW_NAME));
    root.insert("on".into(), triggers_to_gha(&ir.triggers));
    if !ir.global_env.is_empty() {
        root.insert("env".into(), string_map(&ir.global_env));
    }
    let jobs = ir
        .jobs
        .iter()
        .map(|j| (j.id.clone(), YamlNode::Mapping(job_to_gha(j))))
        .collect();
    root.insert("jobs".into(), YamlNode::Mapping(jobs));
    normalize_document(CiDialect::GitHubActions, &YamlNode::Mapping(root))
}
