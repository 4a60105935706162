//! `cigrate`: migrate CI configurations between Travis CI and GitHub Actions
//! and evaluate migration quality.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use cigrate_core::config::{detect_dialect, parse_config, CiDialect, ConfigError, RawConfig};
use cigrate_core::corpus::{ingest, load_corpus, read_report, write_report, CorpusError, Direction, DEFAULT_SPLIT_SEED};
use cigrate_core::eval::{compare_reports, evaluate, ComparisonResult, Engine, EvalConfig, EvalError, LlmEngine};
use cigrate_core::lint::{lint, Severity};
use cigrate_core::llm::{
    export_finetune_dataset, migrate_llm, EndpointConfig, FewShotPolicy, LlmError, PromptSettings, Selection,
    API_KEY_ENV, DEFAULT_MAX_OUTPUT_TOKENS,
};
use cigrate_core::metrics::{Smoothing, DEFAULT_N_MAX, DEFAULT_TRIVIAL_K};
use cigrate_core::normalize::normalize;
use cigrate_core::translate::migrate_rules;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_DOMAIN: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_TRANSPORT: u8 = 3;

/// A failed command: message for standard error plus exit status.
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn domain(message: impl Display) -> Self {
        Self {
            status: EXIT_DOMAIN,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self {
            status: EXIT_PARSE,
            message: e.to_string(),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let status = if matches!(e, CorpusError::PairParse { .. }) { EXIT_PARSE } else { EXIT_DOMAIN };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<LlmError> for Failure {
    fn from(e: LlmError) -> Self {
        let status = if e.is_transport() { EXIT_TRANSPORT } else { EXIT_DOMAIN };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corpus(c) => c.into(),
            other => Failure::domain(other),
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "cigrate", version, about = "Migrate CI configurations between Travis CI and GitHub Actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Travis,
    Gha,
}

impl From<DialectArg> for CiDialect {
    fn from(d: DialectArg) -> Self {
        match d {
            DialectArg::Travis => CiDialect::TravisCI,
            DialectArg::Gha => CiDialect::GitHubActions,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Rules,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    First,
    Random,
    Overlap,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Cosine,
    CrystalBleu,
}

impl MetricArg {
    fn name(self) -> &'static str {
        match self {
            MetricArg::Cosine => "cosine",
            MetricArg::CrystalBleu => "crystal_bleu",
        }
    }
}

/// LLM connection and prompting flags shared by `migrate` and `eval`.
#[derive(clap::Args)]
struct LlmArgs {
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
    /// Base URL of a chat-completion API; requests go to <URL>/chat/completions.
    #[arg(long)]
    endpoint: Option<String>,
    /// Number of in-context examples drawn from the training split.
    #[arg(long = "few-shot", default_value_t = 0)]
    few_shot: usize,
    /// How in-context examples are chosen.
    #[arg(long, value_enum, default_value = "overlap")]
    selection: SelectionArg,
    /// Seed for `--selection random`.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    #[arg(long = "max-tokens", default_value_t = DEFAULT_MAX_OUTPUT_TOKENS)]
    max_tokens: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
}

impl LlmArgs {
    fn policy(&self) -> Option<FewShotPolicy> {
        let selection = match self.selection {
            SelectionArg::First => Selection::First,
            SelectionArg::Random => Selection::Random { seed: self.seed },
            SelectionArg::Overlap => Selection::SameFeatureOverlap,
        };
        (self.few_shot > 0).then_some(FewShotPolicy {
            k: self.few_shot,
            selection,
        })
    }

    /// Validates the flags and reads the credential from the environment.
    fn engine(&self) -> Result<LlmEngine, Failure> {
        let model = self.model.clone().ok_or_else(|| Failure::domain("--engine llm requires --model"))?;
        let base = self.endpoint.clone().ok_or_else(|| Failure::domain("--engine llm requires --endpoint"))?;
        let mut endpoint = EndpointConfig::from_env(base);
        if endpoint.api_key.is_none() {
            return Err(LlmError::Auth(format!("{API_KEY_ENV} is not set")).into());
        }
        endpoint.timeout = Duration::from_secs(self.timeout);
        Ok(LlmEngine {
            settings: PromptSettings {
                model_name: model,
                temperature: self.temperature,
                max_output_tokens: self.max_tokens,
            },
            endpoint,
            few_shot: self.policy(),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Migrate one configuration file.
    Migrate {
        #[arg(long, value_enum)]
        from: DialectArg,
        #[arg(long, value_enum)]
        to: DialectArg,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "rules")]
        engine: EngineArg,
        /// Corpus supplying few-shot examples.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Migrate every test pair of a corpus and score the results.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// travis-to-gha or gha-to-travis.
        #[arg(long, default_value = "travis-to-gha")]
        direction: String,
        #[arg(long, value_enum, default_value = "rules")]
        engine: EngineArg,
        /// Size of the trivially shared n-gram set.
        #[arg(long = "trivial-k", default_value_t = DEFAULT_TRIVIAL_K)]
        trivial_k: usize,
        /// Highest n-gram order.
        #[arg(long = "n-max", default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, value_enum, default_value = "none")]
        smoothing: SmoothingArg,
        /// Pairs migrated concurrently.
        #[arg(long = "in-flight", default_value_t = cigrate_core::eval::DEFAULT_IN_FLIGHT)]
        in_flight: usize,
        /// Report path; a CSV of the records is written next to it.
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Test whether two reports differ on a metric (Wilcoxon signed-rank).
    Compare {
        #[arg(long = "report-a")]
        report_a: PathBuf,
        #[arg(long = "report-b")]
        report_b: PathBuf,
        #[arg(long, value_enum, default_value = "cosine")]
        metric: MetricArg,
    },
    /// Write the training split as chat-format JSON lines.
    ExportFinetune {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "travis-to-gha")]
        direction: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lint a configuration file.
    Lint {
        /// Detected from the content when omitted.
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
        file: PathBuf,
    },
    /// Print the canonical form of a configuration file.
    Normalize {
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
        file: PathBuf,
    },
    /// Build a corpus directory from a tree of project checkouts.
    Ingest {
        /// Tree of projects holding .travis.yml and/or .github/workflows.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed of the 80/20 split used when the tree has no split file.
        #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
        seed: u64,
    },
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::domain(format!("E_IO: {}: {e}", path.display())))
}

fn load_config(path: &Path, dialect: Option<DialectArg>) -> Result<RawConfig, Failure> {
    let bytes = read_file(path)?;
    let dialect = match dialect {
        Some(d) => d.into(),
        None => detect_dialect(&bytes)?,
    };
    Ok(parse_config(&bytes, dialect)?.with_source_path(path))
}

fn parse_direction(text: &str) -> Result<Direction, Failure> {
    let direction: Direction = text.parse().map_err(Failure::domain)?;
    if direction.source == direction.target {
        return Err(Failure::domain(format!("E_SAME_DIALECT: {text}")));
    }
    Ok(direction)
}

fn write_output(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::domain(format!("E_IO: {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::domain(format!("E_IO: stdout: {e}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_migrate(
    from: DialectArg,
    to: DialectArg,
    input: &Path,
    output: Option<&Path>,
    engine: EngineArg,
    corpus: Option<&Path>,
    llm: &LlmArgs,
) -> Outcome {
    let (from, to): (CiDialect, CiDialect) = (from.into(), to.into());
    if from == to {
        return Err(Failure::domain(format!("E_SAME_DIALECT: source and target are both {from}")));
    }
    let source = load_config(input, Some(if from == CiDialect::TravisCI { DialectArg::Travis } else { DialectArg::Gha }))?;
    let text = match engine {
        EngineArg::Rules => {
            let result = migrate_rules(&source, to).map_err(Failure::domain)?;
            for warning in &result.warnings {
                eprintln!("{warning}");
            }
            result.output.to_yaml()
        }
        EngineArg::Llm => {
            let engine = llm.engine()?;
            let corpus = corpus.map(load_corpus).transpose()?;
            let migrated = migrate_llm(
                &source,
                to,
                engine.few_shot.as_ref(),
                corpus.as_ref(),
                &engine.settings,
                &engine.endpoint,
            )?;
            for diagnostic in lint(&migrated.output).diagnostics {
                eprintln!("{diagnostic}");
            }
            let mut yaml = migrated.completion.extracted_yaml.unwrap_or_default();
            yaml.push('\n');
            yaml
        }
    };
    write_output(output, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    corpus: &Path,
    direction: &str,
    engine: EngineArg,
    trivial_k: usize,
    n_max: usize,
    smoothing: SmoothingArg,
    in_flight: usize,
    report_path: &Path,
    llm: &LlmArgs,
) -> Outcome {
    let direction = parse_direction(direction)?;
    let engine = match engine {
        EngineArg::Rules => Engine::Rules,
        EngineArg::Llm => Engine::Llm(llm.engine()?),
    };
    let corpus = load_corpus(corpus)?;
    let config = EvalConfig {
        direction,
        engine,
        n_max,
        trivial_k,
        smoothing: match smoothing {
            SmoothingArg::None => Smoothing::None,
            SmoothingArg::AddOne => Smoothing::AddOne,
        },
        in_flight,
    };
    let outcome = evaluate(&corpus, &config)?;
    write_report(&outcome.report, report_path)?;

    let report = &outcome.report;
    println!("run {} ({} engine, {}, {} pairs)", report.run_id, report.engine, direction, report.records.len());
    println!("{:<16} {:>8} {:>8} {:>8}", "metric", "mean", "median", "stddev");
    for (name, summary) in &report.aggregates.per_metric {
        println!("{:<16} {:>8.4} {:>8.4} {:>8.4}", name, summary.mean, summary.median, summary.stddev);
    }
    println!("{:<16} {:>8.4}", "lint_pass_rate", report.aggregates.lint_pass_rate);
    println!("{:<16} {:>8.4}", "exact_match_rate", report.aggregates.exact_match_rate);
    println!("report written to {}", report_path.display());
    if !outcome.failures.is_empty() {
        eprintln!("warning: {} of {} pairs failed and scored zero", outcome.failures.len(), report.records.len());
        for f in &outcome.failures {
            eprintln!("  {}: {}", f.pair_id, f.message);
        }
    }
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path, metric: MetricArg) -> Outcome {
    let (a, b) = (read_report(a)?, read_report(b)?);
    let comparison = compare_reports(&a, &b, metric.name())?;
    println!("metric: {}", comparison.metric);
    println!("pairs compared: {}", comparison.n_overlap);
    println!("mean A: {:.6}", comparison.mean_a);
    println!("mean B: {:.6}", comparison.mean_b);
    match comparison.result {
        ComparisonResult::Tested(w) => {
            let method = match w.method {
                cigrate_core::metrics::PValueMethod::Exact => "exact",
                cigrate_core::metrics::PValueMethod::NormalApproximation => "normal approximation",
            };
            println!("statistic: {}", w.statistic);
            println!("p-value: {} ({method})", w.p_value);
            println!("n_effective: {}", w.n_effective);
        }
        ComparisonResult::NoDetectableDifference => {
            println!("no detectable difference (every paired difference is zero)");
        }
    }
    Ok(())
}

fn cmd_export(corpus: &Path, direction: &str, out: &Path) -> Outcome {
    let direction = parse_direction(direction)?;
    let corpus = load_corpus(corpus)?;
    let mut buffer = Vec::new();
    let count = export_finetune_dataset(&corpus, direction, &mut buffer)?;
    fs::write(out, buffer).map_err(|e| Failure::domain(format!("E_IO: {}: {e}", out.display())))?;
    println!("{count} records written");
    Ok(())
}

fn cmd_lint(dialect: Option<DialectArg>, file: &Path) -> Outcome {
    let report = lint(&load_config(file, dialect)?);
    for diagnostic in &report.diagnostics {
        println!("{diagnostic}");
    }
    if report.passed {
        Ok(())
    } else {
        let errors = report.diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
        Err(Failure::domain(format!("{errors} lint error(s)")))
    }
}

fn cmd_normalize(dialect: Option<DialectArg>, file: &Path) -> Outcome {
    write_output(None, &normalize(&load_config(file, dialect)?).to_yaml())
}

fn cmd_ingest(dataset: &Path, out: &Path, seed: u64) -> Outcome {
    let summary = ingest(dataset, out, seed)?;
    let c = summary.counts;
    println!("travis_only: {}", c.travis_only);
    println!("gha_only: {}", c.gha_only);
    println!("dual: {}", c.dual);
    if summary.dataset_split {
        println!("split: taken from the dataset");
    } else {
        println!("split: seeded 80/20 (seed {seed})");
    }
    if summary.multi_workflow > 0 {
        eprintln!(
            "note: {} dual projects have several workflow files; the first by name was paired",
            summary.multi_workflow
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Migrate {
            from,
            to,
            input,
            output,
            engine,
            corpus,
            llm,
        } => cmd_migrate(from, to, &input, output.as_deref(), engine, corpus.as_deref(), &llm),
        Command::Eval {
            corpus,
            direction,
            engine,
            trivial_k,
            n_max,
            smoothing,
            in_flight,
            report,
            llm,
        } => cmd_eval(&corpus, &direction, engine, trivial_k, n_max, smoothing, in_flight, &report, &llm),
        Command::Compare {
            report_a,
            report_b,
            metric,
        } => cmd_compare(&report_a, &report_b, metric),
        Command::ExportFinetune { corpus, direction, out } => cmd_export(&corpus, &direction, &out),
        Command::Lint { dialect, file } => cmd_lint(dialect, &file),
        Command::Normalize { dialect, file } => cmd_normalize(dialect, &file),
        Command::Ingest { dataset, out, seed } => cmd_ingest(&dataset, &out, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message);
            ExitCode::from(failure.status)
        }
    }
}
