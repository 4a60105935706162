//! Evaluation reports, persisted as JSON with a sibling CSV of records.

use std::fs;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CorpusError;
use crate::metrics::{aggregate_scores, Aggregates, ScoreRecord, Smoothing};

/// Column order of the CSV sibling.
pub const CSV_COLUMNS: [&str; 7] = [
    "pair_id",
    "engine",
    "cosine",
    "crystal_bleu",
    "exact_match",
    "lint_passed",
    "warnings_count",
];

/// Everything needed to re-run an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub direction: String,
    pub few_shot_k: usize,
    pub few_shot_selection: Option<String>,
    pub n_max: usize,
    pub trivial_k: usize,
    pub smoothing: Smoothing,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub temperature: f64,
    pub max_output_tokens: usize,
    /// Cosine vectors hold raw term frequencies.
    pub cosine_weighting: String,
    /// Which texts the trivially shared n-grams were drawn from.
    pub trivial_background: String,
    pub trivial_set_id: String,
    pub corpus_manifest_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_id: String,
    pub engine: String,
    pub template_id: String,
    pub parameters: ReportParameters,
    /// Sorted by pair id.
    pub records: Vec<ScoreRecord>,
    pub aggregates: Aggregates,
    /// ISO-8601 UTC.
    pub created_at: String,
}

impl EvalReport {
    /// Sorts `records`, derives the aggregates and stamps the run id, which
    /// hashes the engine, template and parameters.
    pub fn new(
        engine: impl Into<String>,
        template_id: impl Into<String>,
        parameters: ReportParameters,
        mut records: Vec<ScoreRecord>,
    ) -> Result<Self, CorpusError> {
        records.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
        let aggregates = aggregate_scores(&records).map_err(|e| CorpusError::ReportInvalid(e.to_string()))?;
        let (engine, template_id) = (engine.into(), template_id.into());
        let mut hasher = Sha256::new();
        hasher.update(engine.as_bytes());
        hasher.update([0]);
        hasher.update(template_id.as_bytes());
        hasher.update([0]);
        hasher.update(serde_json::to_vec(&parameters).expect("parameters serialize"));
        let run_id = hex::encode(&hasher.finalize()[..8]);
        Ok(Self {
            run_id,
            engine,
            template_id,
            parameters,
            records,
            aggregates,
            created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        })
    }

    /// Checks record order and that the aggregates recompute exactly.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !self.records.windows(2).all(|w| w[0].pair_id < w[1].pair_id) {
            return Err(CorpusError::ReportInvalid("records are not sorted by unique pair id".into()));
        }
        let recomputed = aggregate_scores(&self.records).map_err(|e| CorpusError::ReportInvalid(e.to_string()))?;
        if recomputed != self.aggregates {
            return Err(CorpusError::ReportInvalid("aggregates do not match records".into()));
        }
        Ok(())
    }
}

/// Writes `report` as JSON to `out` and its records as CSV next to it
/// (same stem, `.csv`). Records are written sorted by pair id with
/// aggregates derived from them.
pub fn write_report(report: &EvalReport, out: &Path) -> Result<(), CorpusError> {
    let mut report = report.clone();
    report.records.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    report.aggregates = aggregate_scores(&report.records).map_err(|e| CorpusError::ReportInvalid(e.to_string()))?;
    report.validate()?;

    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    fs::write(out, json).map_err(|e| CorpusError::io(out, e))?;

    let csv_path = out.with_extension("csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| CorpusError::io(&csv_path, e))?;
    for record in &report.records {
        writer.serialize(record).map_err(|e| CorpusError::io(&csv_path, e))?;
    }
    writer.flush().map_err(|e| CorpusError::io(&csv_path, e))
}

/// Reads a JSON report and checks its invariants.
pub fn read_report(path: &Path) -> Result<EvalReport, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let report: EvalReport = serde_json::from_slice(&bytes).map_err(|e| CorpusError::ReportInvalid(e.to_string()))?;
    report.validate()?;
    Ok(report)
}
