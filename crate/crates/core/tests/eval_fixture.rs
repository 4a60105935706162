//! End-to-end evaluation over the bundled fixture corpus.

mod common;

use std::time::Instant;

use cigrate_core::corpus::{load_corpus, read_report, write_report, Direction, EvalReport, Split};
use cigrate_core::eval::{compare_reports, evaluate, ComparisonResult, Engine, EvalConfig};
use cigrate_core::metrics::{aggregate_scores, ScoreRecord};
use common::fixture_corpus;

#[test]
fn fixture_corpus_loads() {
    let corpus = load_corpus(&fixture_corpus()).unwrap();
    assert_eq!(corpus.pairs.len(), 10);
    assert_eq!(corpus.manifest.counts.dual, 10);
    let train = corpus.oriented(Split::Train, Direction::TRAVIS_TO_GHA).len();
    let test = corpus.oriented(Split::Test, Direction::TRAVIS_TO_GHA).len();
    assert_eq!(train + test, 10);
    assert!(train > 0 && test > 0);
}

#[test]
fn rules_engine_fixture_run() {
    let started = Instant::now();
    let corpus = load_corpus(&fixture_corpus()).unwrap();
    for direction in [Direction::TRAVIS_TO_GHA, Direction::GHA_TO_TRAVIS] {
        let outcome = evaluate(&corpus, &EvalConfig::new(direction, Engine::Rules)).unwrap();
        let report = &outcome.report;
        assert_eq!(report.records.len(), corpus.oriented(Split::Test, direction).len());
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert!(report.records.iter().all(|r| r.lint_passed));
        assert!(report.records.iter().all(|r| r.cosine > 0.3), "{:?}", report.records);
        assert_eq!(report.aggregates, aggregate_scores(&report.records).unwrap());
        assert_eq!(report.parameters.direction, direction.to_string());
        assert_eq!(report.parameters.trivial_background, "train_references");

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_report(report, &path).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(&back, report);
        assert_eq!(back.aggregates, aggregate_scores(&back.records).unwrap());

        let same = compare_reports(&back, &back, "cosine").unwrap();
        assert_eq!(same.result, ComparisonResult::NoDetectableDifference);
        assert_eq!(same.n_overlap, back.records.len());
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "took {:?}", started.elapsed());
}

#[test]
fn evaluation_is_deterministic() {
    let corpus = load_corpus(&fixture_corpus()).unwrap();
    let config = EvalConfig::new(Direction::TRAVIS_TO_GHA, Engine::Rules);
    let a = evaluate(&corpus, &config).unwrap().report;
    let mut serial = config.clone();
    serial.in_flight = 1;
    let b = evaluate(&corpus, &serial).unwrap().report;
    assert_eq!(a.records, b.records);
    assert_eq!(a.run_id, b.run_id);
}

fn report(scores: &[(&str, f64)]) -> EvalReport {
    let corpus = load_corpus(&fixture_corpus()).unwrap();
    let base = evaluate(&corpus, &EvalConfig::new(Direction::TRAVIS_TO_GHA, Engine::Rules)).unwrap().report;
    let records = scores
        .iter()
        .map(|(id, v)| ScoreRecord {
            cosine: *v,
            crystal_bleu: *v,
            ..ScoreRecord::failed(*id, "rules")
        })
        .collect();
    EvalReport::new("rules", "cigrate-v1", base.parameters, records).unwrap()
}

#[test]
fn compare_known_differences() {
    let a = report(&[("p1", 5.0), ("p2", 1.0), ("p3", 6.0), ("only-a", 0.0)]);
    let b = report(&[("p1", 3.0), ("p2", 2.0), ("p3", 3.0), ("only-b", 0.0)]);
    let c = compare_reports(&a, &b, "cosine").unwrap();
    assert_eq!(c.n_overlap, 3);
    match c.result {
        ComparisonResult::Tested(w) => {
            assert_eq!(w.p_value, 0.5);
            assert_eq!(w.statistic, 1.0);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(c.mean_a, 4.0);
    let disjoint = report(&[("zz", 1.0)]);
    assert_eq!(compare_reports(&a, &disjoint, "cosine").unwrap_err().code(), "E_NO_OVERLAP");
    assert_eq!(compare_reports(&a, &b, "bleu").unwrap_err().code(), "E_UNKNOWN_METRIC");
}
