//! Dialect-neutral pipeline model that both dialects lower into and raise
//! from.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::config::YamlPath;

/// Push/PR trigger filters. Empty means "the dialect's default triggers".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TriggerSpec {
    pub events: Vec<String>,
    pub branches: Vec<String>,
    pub branches_ignore: Vec<String>,
}

impl TriggerSpec {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty() && self.branches.is_empty() && self.branches_ignore.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunnerOs {
    Linux,
    MacOS,
    Windows,
}

impl RunnerOs {
    /// Neutral spelling used for `os` matrix values inside the IR.
    pub fn ir_name(self) -> &'static str {
        match self {
            RunnerOs::Linux => "linux",
            RunnerOs::MacOS => "macos",
            RunnerOs::Windows => "windows",
        }
    }

    pub fn from_ir_name(name: &str) -> Option<Self> {
        match name {
            "linux" => Some(RunnerOs::Linux),
            "macos" => Some(RunnerOs::MacOS),
            "windows" => Some(RunnerOs::Windows),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    Java,
    Node,
    Python,
    Go,
    Rust,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Java,
        Language::Node,
        Language::Python,
        Language::Go,
        Language::Rust,
    ];

    /// Matrix dimension name carrying this language's version.
    pub fn dimension(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Node => "node",
            Language::Python => "python",
            Language::Go => "go",
            Language::Rust => "rust",
        }
    }

    pub fn from_dimension(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.dimension() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VersionRef {
    Literal(String),
    /// Taken from a matrix dimension of the owning job.
    Matrix(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Run(String),
    SetupLanguage {
        language: Language,
        version: Option<VersionRef>,
    },
    Cache {
        paths: Vec<String>,
        key: String,
    },
    Checkout,
    UnmappedAction {
        uses: String,
        inputs: IndexMap<String, String>,
    },
    PackageInstall(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepCondition {
    Always,
    OnSuccess,
    OnFailure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepIR {
    pub kind: StepKind,
    /// `None` runs the step under the dialect's default rule.
    pub condition: Option<StepCondition>,
    pub name: Option<String>,
}

impl StepIR {
    pub fn new(kind: StepKind) -> Self {
        Self {
            kind,
            condition: None,
            name: None,
        }
    }

    pub fn run(command: impl Into<String>) -> Self {
        Self::new(StepKind::Run(command.into()))
    }

    pub fn with_condition(mut self, condition: Option<StepCondition>) -> Self {
        self.condition = condition;
        self
    }

    pub fn command(&self) -> Option<&str> {
        match &self.kind {
            StepKind::Run(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixValue {
    Scalar(String),
    /// A set of environment assignments, e.g. from Travis `env: ["A=1 B=2"]`.
    Assignments(IndexMap<String, String>),
}

pub type MatrixEntry = IndexMap<String, MatrixValue>;

/// Build matrix. Dimension names are neutral: a language dimension
/// (`java`, `node`, ...), `os` (values `linux`/`macos`/`windows`) or `env`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatrixIR {
    pub dimensions: IndexMap<String, Vec<MatrixValue>>,
    pub include: Vec<MatrixEntry>,
    pub exclude: Vec<MatrixEntry>,
    pub allow_failures: Vec<MatrixEntry>,
}

impl MatrixIR {
    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
            && self.include.is_empty()
            && self.exclude.is_empty()
            && self.allow_failures.is_empty()
    }

    /// Whether any dimension or include entry mentions `key`.
    pub fn mentions(&self, key: &str) -> bool {
        self.dimensions.contains_key(key) || self.include.iter().any(|e| e.contains_key(key))
    }

    /// Environment variable names set through the `env` dimension or entries.
    pub fn env_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        let values = self
            .dimensions
            .get("env")
            .into_iter()
            .flatten()
            .chain(self.include.iter().filter_map(|e| e.get("env")));
        for value in values {
            if let MatrixValue::Assignments(a) = value {
                for k in a.keys() {
                    if !names.contains(k) {
                        names.push(k.clone());
                    }
                }
            }
        }
        names
    }

    /// Concrete value combinations of a matrix: the cross product minus
    /// excluded combinations, plus include entries not already present.
    pub fn expand(&self) -> Vec<MatrixEntry> {
        let mut combos: Vec<MatrixEntry> = vec![MatrixEntry::new()];
        for (dim, values) in &self.dimensions {
            combos = combos
                .iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(dim.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        let matches = |combo: &MatrixEntry, entry: &MatrixEntry| entry.iter().all(|(k, v)| combo.get(k) == Some(v));
        combos.retain(|c| !self.exclude.iter().any(|e| matches(c, e)));
        let base = combos.first().cloned().unwrap_or_default();
        for entry in &self.include {
            if combos.iter().any(|c| matches(c, entry)) {
                continue;
            }
            let mut combo = base.clone();
            combo.extend(entry.iter().map(|(k, v)| (k.clone(), v.clone())));
            combos.push(combo);
        }
        combos
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobIR {
    pub id: String,
    pub runner_os: RunnerOs,
    pub runner_version: Option<String>,
    pub matrix: MatrixIR,
    pub env: IndexMap<String, String>,
    pub steps: Vec<StepIR>,
    pub needs: Vec<String>,
    pub allow_failure: bool,
    /// Stage label carried over from dialects that group jobs in stages.
    pub stage: Option<String>,
}

impl JobIR {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            runner_os: RunnerOs::Linux,
            runner_version: None,
            matrix: MatrixIR::default(),
            env: IndexMap::new(),
            steps: Vec::new(),
            needs: Vec::new(),
            allow_failure: false,
            stage: None,
        }
    }

    pub fn commands(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().filter_map(StepIR::command)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WarningCode {
    #[serde(rename = "W_NO_EQUIVALENT")]
    NoEquivalent,
    #[serde(rename = "W_DROPPED_KEY")]
    DroppedKey,
    #[serde(rename = "W_APPROX_RUNNER")]
    ApproxRunner,
    #[serde(rename = "W_UNKNOWN_ACTION")]
    UnknownAction,
    #[serde(rename = "W_IMPORT_UNSUPPORTED")]
    ImportUnsupported,
}

impl WarningCode {
    pub fn as_str(self) -> &'static str {
        match self {
            WarningCode::NoEquivalent => "W_NO_EQUIVALENT",
            WarningCode::DroppedKey => "W_DROPPED_KEY",
            WarningCode::ApproxRunner => "W_APPROX_RUNNER",
            WarningCode::UnknownAction => "W_UNKNOWN_ACTION",
            WarningCode::ImportUnsupported => "W_IMPORT_UNSUPPORTED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationWarning {
    pub code: WarningCode,
    pub path: String,
    pub message: String,
}

impl fmt::Display for MigrationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.code.as_str(), self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineIR {
    pub triggers: TriggerSpec,
    pub global_env: IndexMap<String, String>,
    pub jobs: Vec<JobIR>,
    pub warnings: Vec<MigrationWarning>,
}

impl PipelineIR {
    pub fn warn(&mut self, code: WarningCode, path: &YamlPath, message: impl Into<String>) {
        self.warnings.push(MigrationWarning {
            code,
            path: path.to_string(),
            message: message.into(),
        });
    }

    /// Run commands of all jobs, in job then step order.
    pub fn commands(&self) -> Vec<&str> {
        self.jobs.iter().flat_map(JobIR::commands).collect()
    }

    pub fn job(&self, id: &str) -> Option<&JobIR> {
        self.jobs.iter().find(|j| j.id == id)
    }

    /// Checks the structural invariants, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.jobs.is_empty() {
            return Err("pipeline has no jobs".into());
        }
        let mut ids = BTreeSet::new();
        for job in &self.jobs {
            if !ids.insert(job.id.as_str()) {
                return Err(format!("duplicate job id `{}`", job.id));
            }
        }
        for job in &self.jobs {
            if job.steps.is_empty() {
                return Err(format!("job `{}` has no steps", job.id));
            }
            for need in &job.needs {
                if !ids.contains(need.as_str()) {
                    return Err(format!("job `{}` needs unknown job `{need}`", job.id));
                }
            }
            for step in &job.steps {
                match &step.kind {
                    StepKind::Run(c) if c.trim().is_empty() => {
                        return Err(format!("job `{}` has an empty run command", job.id));
                    }
                    StepKind::UnmappedAction { .. }
                        if !self.warnings.iter().any(|w| {
                            matches!(w.code, WarningCode::UnknownAction | WarningCode::NoEquivalent)
                        }) =>
                    {
                        return Err(format!("job `{}` has an unmapped action without warning", job.id));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}
