//! Migration-pair corpora: manifest, loading, train/test splits, dataset
//! ingestion and evaluation reports.

mod ingest;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use ingest::{ingest, IngestSummary, DEFAULT_SPLIT_SEED, TRAIN_FRACTION};
pub use report::{read_report, write_report, EvalReport, ReportParameters, CSV_COLUMNS};

use crate::config::{parse_config, CiDialect, ConfigError, RawConfig};

/// Manifest schema understood by this version.
pub const SCHEMA_VERSION: &str = "1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAIRS_DIR: &str = "pairs";

/// File name of a dialect's config inside a pair directory.
pub fn pair_file_name(dialect: CiDialect) -> &'static str {
    match dialect {
        CiDialect::TravisCI => "travis.yml",
        CiDialect::GitHubActions => "gha.yml",
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("E_MANIFEST_MISSING: no manifest at {0}")]
    ManifestMissing(PathBuf),
    #[error("E_MANIFEST_INVALID: {0}")]
    ManifestInvalid(String),
    #[error("E_PAIR_FILE_MISSING: pair {pair_id} lacks {file}")]
    PairFileMissing { pair_id: String, file: String },
    #[error("E_COUNT_MISMATCH: {what}: manifest says {expected}, found {found}")]
    CountMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{source} (pair {pair_id})")]
    PairParse {
        pair_id: String,
        #[source]
        source: ConfigError,
    },
    #[error("E_REPORT_INVALID: {0}")]
    ReportInvalid(String),
    #[error("E_IO: {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CorpusError {
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::ManifestMissing(_) => "E_MANIFEST_MISSING",
            CorpusError::ManifestInvalid(_) => "E_MANIFEST_INVALID",
            CorpusError::PairFileMissing { .. } => "E_PAIR_FILE_MISSING",
            CorpusError::CountMismatch { .. } => "E_COUNT_MISMATCH",
            CorpusError::PairParse { source, .. } => source.code(),
            CorpusError::ReportInvalid(_) => "E_REPORT_INVALID",
            CorpusError::Io { .. } => "E_IO",
        }
    }

    pub(crate) fn io(path: &Path, err: impl fmt::Display) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A migration direction, written `travis-to-gha` or `gha-to-travis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub source: CiDialect,
    pub target: CiDialect,
}

impl Direction {
    pub const TRAVIS_TO_GHA: Direction = Direction {
        source: CiDialect::TravisCI,
        target: CiDialect::GitHubActions,
    };
    pub const GHA_TO_TRAVIS: Direction = Direction {
        source: CiDialect::GitHubActions,
        target: CiDialect::TravisCI,
    };

    pub fn reversed(self) -> Direction {
        Direction {
            source: self.target,
            target: self.source,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-to-{}", self.source.slug(), self.target.slug())
    }
}

impl FromStr for Direction {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, target) = s
            .split_once("-to-")
            .ok_or_else(|| ConfigError::UnknownDialect(s.to_string()))?;
        Ok(Direction {
            source: source.parse()?,
            target: target.parse()?,
        })
    }
}

/// One source config and its human-written counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationPair {
    pub pair_id: String,
    pub source: RawConfig,
    pub reference_target: RawConfig,
    pub direction: Direction,
    pub split: Split,
}

impl MigrationPair {
    /// The pair viewed in `direction`: both files of a dual-CI project
    /// serve as source and reference for either direction.
    pub fn oriented(&self, direction: Direction) -> MigrationPair {
        if direction == self.direction {
            return self.clone();
        }
        debug_assert_eq!(direction, self.direction.reversed());
        MigrationPair {
            pair_id: self.pair_id.clone(),
            source: self.reference_target.clone(),
            reference_target: self.source.clone(),
            direction,
            split: self.split,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub travis_only: usize,
    pub gha_only: usize,
    pub dual: usize,
}

/// The self-describing index of a corpus directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: String,
    pub counts: ManifestCounts,
    pub split_assignment: BTreeMap<String, Split>,
    /// Dialect of each pair's original config; pairs not listed migrated
    /// from Travis CI.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub source_dialect: BTreeMap<String, CiDialect>,
    /// Seed of the generated split, absent when the dataset supplied one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

impl CorpusManifest {
    pub fn direction_of(&self, pair_id: &str) -> Direction {
        let source = self.source_dialect.get(pair_id).copied().unwrap_or(CiDialect::TravisCI);
        Direction {
            source,
            target: source.other(),
        }
    }

    /// Content hash of the manifest's canonical JSON.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn read(root: &Path) -> Result<Self, CorpusError> {
        let path = root.join(MANIFEST_FILE);
        let bytes = fs::read(&path).map_err(|_| CorpusError::ManifestMissing(path.clone()))?;
        let manifest: CorpusManifest =
            serde_json::from_slice(&bytes).map_err(|e| CorpusError::ManifestInvalid(e.to_string()))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(CorpusError::ManifestInvalid(format!(
                "schema_version {} is not {SCHEMA_VERSION}",
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }

    pub fn write(&self, root: &Path) -> Result<(), CorpusError> {
        let path = root.join(MANIFEST_FILE);
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        fs::write(&path, json).map_err(|e| CorpusError::io(&path, e))
    }
}

/// A loaded corpus. Immutable after loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationCorpus {
    /// Sorted by pair id.
    pub pairs: Vec<MigrationPair>,
    pub manifest: CorpusManifest,
}

impl MigrationCorpus {
    /// Pairs of one split viewed in `direction`, in pair id order.
    pub fn oriented(&self, which: Split, direction: Direction) -> Vec<MigrationPair> {
        split_corpus(self, which).into_iter().map(|p| p.oriented(direction)).collect()
    }
}

fn pair_dirs(root: &Path) -> Result<Vec<String>, CorpusError> {
    let dir = root.join(PAIRS_DIR);
    let Ok(entries) = fs::read_dir(&dir) else {
        return Ok(Vec::new());
    };
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CorpusError::io(&dir, e))?;
        if entry.path().is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

fn read_pair(root: &Path, pair_id: &str, direction: Direction, split: Split) -> Result<MigrationPair, CorpusError> {
    let load = |dialect: CiDialect| -> Result<RawConfig, CorpusError> {
        let path = root.join(PAIRS_DIR).join(pair_id).join(pair_file_name(dialect));
        let bytes = fs::read(&path).map_err(|_| CorpusError::PairFileMissing {
            pair_id: pair_id.to_string(),
            file: pair_file_name(dialect).to_string(),
        })?;
        parse_config(&bytes, dialect)
            .map(|c| c.with_source_path(&path))
            .map_err(|source| CorpusError::PairParse {
                pair_id: pair_id.to_string(),
                source,
            })
    };
    Ok(MigrationPair {
        pair_id: pair_id.to_string(),
        source: load(direction.source)?,
        reference_target: load(direction.target)?,
        direction,
        split,
    })
}

/// Loads `root/manifest.json` and every `root/pairs/<id>/{travis,gha}.yml`.
/// Read-only: nothing under `root` is modified.
pub fn load_corpus(root: &Path) -> Result<MigrationCorpus, CorpusError> {
    let manifest = CorpusManifest::read(root)?;
    let dirs = pair_dirs(root)?;
    let assigned = manifest.split_assignment.len();
    if manifest.counts.dual != assigned {
        return Err(CorpusError::CountMismatch {
            what: "split assignments",
            expected: manifest.counts.dual,
            found: assigned,
        });
    }
    if manifest.counts.dual != dirs.len() {
        return Err(CorpusError::CountMismatch {
            what: "pair directories",
            expected: manifest.counts.dual,
            found: dirs.len(),
        });
    }
    if let Some(stray) = manifest.source_dialect.keys().find(|id| !manifest.split_assignment.contains_key(*id)) {
        return Err(CorpusError::ManifestInvalid(format!("source_dialect names unknown pair {stray}")));
    }
    let entries: Vec<(&String, &Split)> = manifest.split_assignment.iter().collect();
    let pairs = entries
        .par_iter()
        .map(|(id, split)| read_pair(root, id, manifest.direction_of(id), **split))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MigrationCorpus { pairs, manifest })
}

/// The pairs of one split, in pair id order.
pub fn split_corpus(corpus: &MigrationCorpus, which: Split) -> Vec<MigrationPair> {
    let mut pairs: Vec<MigrationPair> = corpus.pairs.iter().filter(|p| p.split == which).cloned().collect();
    pairs.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    pairs
}
