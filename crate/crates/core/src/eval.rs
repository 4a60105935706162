//! Corpus evaluation and report comparison.

use rayon::prelude::*;
use thiserror::Error;

use crate::config::RawConfig;
use crate::corpus::{Direction, EvalReport, MigrationCorpus, MigrationPair, ReportParameters, Split};
use crate::lint::lint;
use crate::llm::{migrate_llm, EndpointConfig, FewShotPolicy, PromptSettings, TEMPLATE_ID};
use crate::metrics::{
    build_trivially_shared, cosine_similarity, crystal_bleu_detail, exact_match, metric_value, wilcoxon_signed_rank,
    MetricsError, ScoreRecord, Smoothing, TriviallySharedSet, DEFAULT_N_MAX, DEFAULT_TRIVIAL_K, METRIC_NAMES,
};
use crate::normalize::{normalize, tokenize, TokenSequence};
use crate::translate::migrate_rules;
use crate::Wilcoxon;

/// Default number of pairs migrated concurrently.
pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("E_EMPTY_SPLIT: the test split has no pairs")]
    EmptyTestSplit,
    #[error("E_NO_OVERLAP: the reports share no pair ids")]
    NoOverlap,
    #[error("E_UNKNOWN_METRIC: `{0}` is not one of cosine, crystal_bleu")]
    UnknownMetric(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::EmptyTestSplit => "E_EMPTY_SPLIT",
            EvalError::NoOverlap => "E_NO_OVERLAP",
            EvalError::UnknownMetric(_) => "E_UNKNOWN_METRIC",
            EvalError::Metrics(e) => e.code(),
            EvalError::Corpus(e) => e.code(),
        }
    }
}

/// The LLM side of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmEngine {
    pub settings: PromptSettings,
    pub endpoint: EndpointConfig,
    pub few_shot: Option<FewShotPolicy>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Rules,
    Llm(LlmEngine),
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Rules => "rules",
            Engine::Llm(_) => "llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub direction: Direction,
    pub engine: Engine,
    pub n_max: usize,
    pub trivial_k: usize,
    pub smoothing: Smoothing,
    pub in_flight: usize,
}

impl EvalConfig {
    pub fn new(direction: Direction, engine: Engine) -> Self {
        Self {
            direction,
            engine,
            n_max: DEFAULT_N_MAX,
            trivial_k: DEFAULT_TRIVIAL_K,
            smoothing: Smoothing::None,
            in_flight: DEFAULT_IN_FLIGHT,
        }
    }
}

/// A pair that produced no usable migration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFailure {
    pub pair_id: String,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub failures: Vec<PairFailure>,
}

fn tokens_of(config: &RawConfig) -> TokenSequence {
    tokenize(&normalize(config).to_yaml())
}

/// The trivially shared n-grams of the Train references, or the empty set
/// when the corpus has no training pairs.
fn background_set(corpus: &MigrationCorpus, config: &EvalConfig) -> Result<(TriviallySharedSet, &'static str), EvalError> {
    let references: Vec<TokenSequence> = corpus
        .oriented(Split::Train, config.direction)
        .iter()
        .map(|p| tokens_of(&p.reference_target))
        .collect();
    if references.is_empty() {
        return Ok((TriviallySharedSet::empty(), "none"));
    }
    Ok((build_trivially_shared(&references, config.trivial_k, config.n_max)?, "train_references"))
}

struct Migrated {
    output: RawConfig,
    warnings: usize,
}

fn migrate(pair: &MigrationPair, config: &EvalConfig, corpus: &MigrationCorpus) -> Result<Migrated, PairFailure> {
    let fail = |code: &'static str, message: String| PairFailure {
        pair_id: pair.pair_id.clone(),
        code,
        message,
    };
    match &config.engine {
        Engine::Rules => migrate_rules(&pair.source, config.direction.target)
            .map(|r| Migrated {
                output: r.output.to_raw(),
                warnings: r.warnings.len(),
            })
            .map_err(|e| fail(e.code(), e.to_string())),
        Engine::Llm(llm) => migrate_llm(
            &pair.source,
            config.direction.target,
            llm.few_shot.as_ref(),
            Some(corpus),
            &llm.settings,
            &llm.endpoint,
        )
        .map(|m| Migrated {
            output: m.output,
            warnings: 0,
        })
        .map_err(|e| fail(e.code(), e.to_string())),
    }
}

fn score_pair(
    pair: &MigrationPair,
    config: &EvalConfig,
    corpus: &MigrationCorpus,
    trivial: &TriviallySharedSet,
) -> (ScoreRecord, Option<PairFailure>) {
    let engine = config.engine.name();
    let migrated = match migrate(pair, config, corpus) {
        Ok(m) => m,
        Err(failure) => return (ScoreRecord::failed(&pair.pair_id, engine), Some(failure)),
    };
    let candidate = normalize(&migrated.output);
    let reference = normalize(&pair.reference_target);
    let (cand_tokens, ref_tokens) = (tokenize(&candidate.to_yaml()), tokenize(&reference.to_yaml()));
    let record = ScoreRecord {
        pair_id: pair.pair_id.clone(),
        engine: engine.to_string(),
        cosine: cosine_similarity(&cand_tokens, &ref_tokens),
        crystal_bleu: crystal_bleu_detail(&cand_tokens, &ref_tokens, trivial, config.n_max, config.smoothing).score,
        exact_match: exact_match(&candidate, &reference).unwrap_or(false),
        lint_passed: lint(&migrated.output).passed,
        warnings_count: migrated.warnings,
    };
    (record, None)
}

/// Migrates every Test pair in `config.direction`, scores it against its
/// reference and assembles a report. A pair that fails to migrate gets an
/// all-zero record; only corpus-level problems abort the run.
pub fn evaluate(corpus: &MigrationCorpus, config: &EvalConfig) -> Result<EvalOutcome, EvalError> {
    let pairs = corpus.oriented(Split::Test, config.direction);
    if pairs.is_empty() {
        return Err(EvalError::EmptyTestSplit);
    }
    let (trivial, background) = background_set(corpus, config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.in_flight.max(1))
        .build()
        .expect("thread pool builds");
    let scored: Vec<(ScoreRecord, Option<PairFailure>)> =
        pool.install(|| pairs.par_iter().map(|p| score_pair(p, config, corpus, &trivial)).collect());
    let (records, failures): (Vec<ScoreRecord>, Vec<Option<PairFailure>>) = scored.into_iter().unzip();

    let (model, endpoint, temperature, max_output_tokens, few_shot) = match &config.engine {
        Engine::Rules => (None, None, 0.0, 0, None),
        Engine::Llm(llm) => (
            Some(llm.settings.model_name.clone()),
            Some(llm.endpoint.base_url.clone()),
            llm.settings.temperature,
            llm.settings.max_output_tokens,
            llm.few_shot,
        ),
    };
    let parameters = ReportParameters {
        direction: config.direction.to_string(),
        few_shot_k: few_shot.map_or(0, |p| p.k),
        few_shot_selection: few_shot.filter(|p| p.k > 0).map(|p| p.selection.name()),
        n_max: config.n_max,
        trivial_k: config.trivial_k,
        smoothing: config.smoothing,
        model,
        endpoint,
        temperature,
        max_output_tokens,
        cosine_weighting: "raw_tf".into(),
        trivial_background: background.into(),
        trivial_set_id: trivial.source_corpus_id.clone(),
        corpus_manifest_hash: corpus.manifest.content_hash(),
    };
    let report = EvalReport::new(config.engine.name(), TEMPLATE_ID, parameters, records)?;
    Ok(EvalOutcome {
        report,
        failures: failures.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonResult {
    Tested(Wilcoxon),
    /// Every paired difference is zero.
    NoDetectableDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: String,
    pub n_overlap: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub result: ComparisonResult,
}

/// Pairs the records of two reports by pair id and runs the Wilcoxon
/// signed-rank test on `metric` (differences are `a - b`).
pub fn compare_reports(a: &EvalReport, b: &EvalReport, metric: &str) -> Result<Comparison, EvalError> {
    if !METRIC_NAMES.contains(&metric) {
        return Err(EvalError::UnknownMetric(metric.to_string()));
    }
    let value = |r: &ScoreRecord| metric_value(r, metric).expect("known metric");
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for record in &a.records {
        if let Some(other) = b.records.iter().find(|r| r.pair_id == record.pair_id) {
            xs.push(value(record));
            ys.push(value(other));
        }
    }
    if xs.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let result = match wilcoxon_signed_rank(&xs, &ys) {
        Ok(w) => ComparisonResult::Tested(w),
        Err(MetricsError::AllZeroDiffs) => ComparisonResult::NoDetectableDifference,
        Err(e) => return Err(e.into()),
    };
    Ok(Comparison {
        metric: metric.to_string(),
        n_overlap: xs.len(),
        mean_a: mean(&xs),
        mean_b: mean(&ys),
        result,
    })
}
