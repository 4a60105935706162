//! Builds a corpus directory from a tree of project checkouts.
//!
//! A project is any directory holding a `.travis.yml` and/or workflow files
//! under `.github/workflows/`. Projects with both become pairs; the others
//! are only counted. A `test.txt` (or `train.txt`) at the tree root listing
//! project paths, one per line, fixes the split; otherwise a seeded 80/20
//! split is drawn and its seed recorded in the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use walkdir::WalkDir;

use super::{
    pair_file_name, CorpusError, CorpusManifest, ManifestCounts, Split, MANIFEST_FILE, PAIRS_DIR, SCHEMA_VERSION,
};
use crate::config::CiDialect;

pub const DEFAULT_SPLIT_SEED: u64 = 20_250_601;
/// Share of pairs assigned to Train by the seeded split.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub counts: ManifestCounts,
    /// Whether the dataset supplied its own split.
    pub dataset_split: bool,
    /// Dual projects with several workflow files; the first by name was used.
    pub multi_workflow: usize,
}

struct Project {
    rel: String,
    travis: Option<PathBuf>,
    workflows: Vec<PathBuf>,
}

fn workflow_files(dir: &Path) -> Vec<PathBuf> {
    let Ok(entries) = fs::read_dir(dir.join(".github").join("workflows")) else {
        return Vec::new();
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "yml" || x == "yaml"))
        .collect();
    files.sort();
    files
}

fn find_projects(tree: &Path) -> Result<Vec<Project>, CorpusError> {
    let mut projects = Vec::new();
    let mut walker = WalkDir::new(tree).sort_by_file_name().into_iter();
    while let Some(entry) = walker.next() {
        let entry = entry.map_err(|e| CorpusError::io(tree, e))?;
        if !entry.file_type().is_dir() {
            continue;
        }
        let dir = entry.path();
        let travis = Some(dir.join(".travis.yml")).filter(|p| p.is_file());
        let workflows = workflow_files(dir);
        if travis.is_none() && workflows.is_empty() {
            continue;
        }
        let rel = dir.strip_prefix(tree).unwrap_or(dir).to_string_lossy().replace('\\', "/");
        let rel = if rel.is_empty() {
            tree.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "project".into())
        } else {
            rel
        };
        projects.push(Project { rel, travis, workflows });
        // A project's own subdirectories are never projects.
        walker.skip_current_dir();
    }
    Ok(projects)
}

/// A directory-safe id: path separators become `__`, other unusual
/// characters `_`.
fn pair_id(rel: &str) -> String {
    rel.split('/')
        .map(|part| {
            part.chars()
                .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

fn read_list(path: &Path) -> Result<Option<BTreeSet<String>>, CorpusError> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(Some(
        text.lines().map(str::trim).filter(|l| !l.is_empty()).map(|l| pair_id(l.trim_end_matches('/'))).collect(),
    ))
}

fn seeded_split(ids: &[String], seed: u64) -> BTreeMap<String, Split> {
    let mut shuffled = ids.to_vec();
    shuffled.sort();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (shuffled.len() as f64 * TRAIN_FRACTION).round() as usize;
    shuffled
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, if i < n_train { Split::Train } else { Split::Test }))
        .collect()
}

/// Scans `tree` and writes `out/manifest.json` plus `out/pairs/<id>/`.
/// `seed` is used only when the tree carries no split file.
pub fn ingest(tree: &Path, out: &Path, seed: u64) -> Result<IngestSummary, CorpusError> {
    if !tree.is_dir() {
        return Err(CorpusError::io(tree, "not a directory"));
    }
    if out.join(MANIFEST_FILE).exists() {
        return Err(CorpusError::io(&out.join(MANIFEST_FILE), "already exists"));
    }
    let projects = find_projects(tree)?;
    let mut counts = ManifestCounts::default();
    let mut multi_workflow = 0;
    let mut dual: BTreeMap<String, (PathBuf, PathBuf)> = BTreeMap::new();
    for project in projects {
        match (project.travis, project.workflows.first()) {
            (Some(travis), Some(workflow)) => {
                multi_workflow += usize::from(project.workflows.len() > 1);
                let id = pair_id(&project.rel);
                if dual.insert(id.clone(), (travis, workflow.clone())).is_some() {
                    return Err(CorpusError::ManifestInvalid(format!("two projects map to pair id {id}")));
                }
            }
            (Some(_), None) => counts.travis_only += 1,
            (None, Some(_)) => counts.gha_only += 1,
            (None, None) => unreachable!("projects carry at least one config"),
        }
    }
    counts.dual = dual.len();

    let ids: Vec<String> = dual.keys().cloned().collect();
    let test_list = read_list(&tree.join("test.txt"))?;
    let train_list = read_list(&tree.join("train.txt"))?;
    let dataset_split = test_list.is_some() || train_list.is_some();
    let (split_assignment, split_seed) = match (test_list, train_list) {
        (Some(test), _) => (
            ids.iter().map(|id| (id.clone(), if test.contains(id) { Split::Test } else { Split::Train })).collect(),
            None,
        ),
        (None, Some(train)) => (
            ids.iter().map(|id| (id.clone(), if train.contains(id) { Split::Train } else { Split::Test })).collect(),
            None,
        ),
        (None, None) => (seeded_split(&ids, seed), Some(seed)),
    };

    for (id, (travis, workflow)) in &dual {
        let dir = out.join(PAIRS_DIR).join(id);
        fs::create_dir_all(&dir).map_err(|e| CorpusError::io(&dir, e))?;
        for (from, dialect) in [(travis, CiDialect::TravisCI), (workflow, CiDialect::GitHubActions)] {
            let to = dir.join(pair_file_name(dialect));
            fs::copy(from, &to).map_err(|e| CorpusError::io(from, e))?;
        }
    }
    fs::create_dir_all(out).map_err(|e| CorpusError::io(out, e))?;
    CorpusManifest {
        schema_version: SCHEMA_VERSION.into(),
        counts,
        split_assignment,
        source_dialect: BTreeMap::new(),
        split_seed,
    }
    .write(out)?;
    Ok(IngestSummary {
        counts,
        dataset_split,
        multi_workflow,
    })
}
