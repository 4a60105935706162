//! Similarity metrics, exact match, score aggregation and the Wilcoxon
//! signed-rank test. Numeric kernels are generic over the float type.

mod bleu;
mod wilcoxon;

use std::collections::BTreeMap;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::*;
pub use wilcoxon::*;

use crate::config::CiDialect;
use crate::normalize::{NormalizedConfig, TokenSequence};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("E_EMPTY_CORPUS: background corpus has no token sequences")]
    EmptyCorpus,
    #[error("E_ALL_ZERO_DIFFS: every paired difference is zero")]
    AllZeroDiffs,
    #[error("E_LENGTH_MISMATCH: {left} scores vs {right} scores")]
    LengthMismatch { left: usize, right: usize },
    #[error("E_EMPTY: no score records to aggregate")]
    Empty,
    #[error("E_DIALECT_MISMATCH: cannot compare {left} with {right}")]
    DialectMismatch { left: CiDialect, right: CiDialect },
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricsError::EmptyCorpus => "E_EMPTY_CORPUS",
            MetricsError::AllZeroDiffs => "E_ALL_ZERO_DIFFS",
            MetricsError::LengthMismatch { .. } => "E_LENGTH_MISMATCH",
            MetricsError::Empty => "E_EMPTY",
            MetricsError::DialectMismatch { .. } => "E_DIALECT_MISMATCH",
        }
    }
}

fn term_frequencies(seq: &TokenSequence) -> BTreeMap<&str, usize> {
    let mut tf = BTreeMap::new();
    for token in seq {
        *tf.entry(token.as_str()).or_insert(0) += 1;
    }
    tf
}

/// Cosine of the raw term-frequency vectors. Two empty sequences are
/// identical (1); one empty sequence shares nothing (0).
pub fn cosine_similarity<F: Float + FromPrimitive>(a: &TokenSequence, b: &TokenSequence) -> F {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return F::one(),
        (true, false) | (false, true) => return F::zero(),
        _ => {}
    }
    let (ta, tb) = (term_frequencies(a), term_frequencies(b));
    let f = |n: usize| F::from_usize(n).unwrap();
    let dot = ta
        .iter()
        .filter_map(|(t, &x)| tb.get(t).map(|&y| f(x) * f(y)))
        .fold(F::zero(), |acc, v| acc + v);
    let squared = |tf: &BTreeMap<&str, usize>| tf.values().fold(F::zero(), |acc, &x| acc + f(x) * f(x));
    // One square root keeps identical vectors at exactly 1.
    (dot / (squared(&ta) * squared(&tb)).sqrt()).min(F::one())
}

/// Whether two configs of the same dialect serialize identically.
pub fn exact_match(a: &NormalizedConfig, b: &NormalizedConfig) -> Result<bool, MetricsError> {
    if a.dialect != b.dialect {
        return Err(MetricsError::DialectMismatch {
            left: a.dialect,
            right: b.dialect,
        });
    }
    Ok(a.to_yaml() == b.to_yaml())
}

/// Scores of one migrated pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub pair_id: String,
    pub engine: String,
    pub cosine: f64,
    pub crystal_bleu: f64,
    pub exact_match: bool,
    pub lint_passed: bool,
    pub warnings_count: usize,
}

impl ScoreRecord {
    /// The record of a migration that produced no usable output.
    pub fn failed(pair_id: impl Into<String>, engine: impl Into<String>) -> Self {
        Self {
            pair_id: pair_id.into(),
            engine: engine.into(),
            cosine: 0.0,
            crystal_bleu: 0.0,
            exact_match: false,
            lint_passed: false,
            warnings_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::Empty);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Ok(Self {
            mean,
            median,
            stddev: variance.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_metric: BTreeMap<String, Summary>,
    pub lint_pass_rate: f64,
    pub exact_match_rate: f64,
}

pub const METRIC_NAMES: [&str; 2] = ["cosine", "crystal_bleu"];

pub fn aggregate_scores(records: &[ScoreRecord]) -> Result<Aggregates, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let column = |f: fn(&ScoreRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let mut per_metric = BTreeMap::new();
    per_metric.insert("cosine".to_string(), Summary::of(&column(|r| r.cosine))?);
    per_metric.insert("crystal_bleu".to_string(), Summary::of(&column(|r| r.crystal_bleu))?);
    let rate = |f: fn(&ScoreRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64;
    Ok(Aggregates {
        per_metric,
        lint_pass_rate: rate(|r| r.lint_passed),
        exact_match_rate: rate(|r| r.exact_match),
    })
}

/// Reads a named metric from a record.
pub fn metric_value(record: &ScoreRecord, metric: &str) -> Option<f64> {
    match metric {
        "cosine" => Some(record.cosine),
        "crystal_bleu" => Some(record.crystal_bleu),
        _ => None,
    }
}
