//! Brute-force oracles and generators shared by the test suites.

use std::collections::BTreeSet;

use cigrate_core::config::{CiDialect, RawConfig};
use cigrate_core::corpus::{CorpusManifest, Direction, ManifestCounts, MigrationCorpus, MigrationPair, Split};
use cigrate_core::metrics::{NGram, TriviallySharedSet};
use cigrate_core::normalize::TokenSequence;
use cigrate_core::synth::{gha_config, travis_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 6] = ["on", "push", "run", "make", "jobs", "steps"];

pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

/// A copy of `tokens` with a few random substitutions and deletions, so
/// pairs share long n-grams.
pub fn mutated(rng: &mut ChaCha8Rng, tokens: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        if rng.gen_bool(0.1) {
            continue;
        }
        out.push(if rng.gen_bool(0.1) { VOCAB[rng.gen_range(0..VOCAB.len())].to_string() } else { t.clone() });
    }
    out
}

pub fn seq(tokens: Vec<String>) -> TokenSequence {
    TokenSequence::new(tokens).unwrap()
}

/// Dense vectors over the joint vocabulary, built by linear counting.
pub fn cosine_oracle(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut vocab: Vec<&String> = a.iter().chain(b).collect();
    vocab.sort();
    vocab.dedup();
    let count = |s: &[String], t: &String| s.iter().filter(|x| *x == t).count() as f64;
    let va: Vec<f64> = vocab.iter().map(|t| count(a, t)).collect();
    let vb: Vec<f64> = vocab.iter().map(|t| count(b, t)).collect();
    let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(&va) * norm(&vb))
}

/// Counts occurrences of `gram` in `tokens` by scanning every window.
pub fn occurrences(tokens: &[String], gram: &[String]) -> usize {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| &tokens[i..i + gram.len()] == gram)
        .count()
}

/// Textbook BLEU-4: clipped modified precision per order, geometric mean
/// with uniform weights, brevity penalty from the candidate and reference
/// lengths.
pub fn bleu4_oracle(cand: &[String], reference: &[String]) -> f64 {
    const N: usize = 4;
    let c = cand.len();
    let r = reference.len();
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0f64;
    for n in 1..=N {
        if c < n {
            return 0.0;
        }
        let total = c - n + 1;
        let mut seen: Vec<&[String]> = Vec::new();
        let mut matched = 0;
        for i in 0..total {
            let gram = &cand[i..i + n];
            if seen.contains(&gram) {
                continue;
            }
            seen.push(gram);
            matched += occurrences(cand, gram).min(occurrences(reference, gram));
        }
        if matched == 0 {
            return 0.0;
        }
        log_sum += (1.0 / N as f64) * (matched as f64 / total as f64).ln();
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp().min(1.0) };
    bp * log_sum.exp()
}

pub fn all_ngrams(tokens: &[String], n_max: usize) -> Vec<NGram> {
    let set: BTreeSet<NGram> = (1..=n_max).flat_map(|n| tokens.windows(n).map(|w| w.to_vec())).collect();
    set.into_iter().collect()
}

pub fn trivial_set(ngrams: impl IntoIterator<Item = NGram>) -> TriviallySharedSet {
    let ngrams: BTreeSet<NGram> = ngrams.into_iter().collect();
    TriviallySharedSet {
        k: ngrams.len(),
        ngrams,
        source_corpus_id: String::new(),
    }
}

/// Doubled midranks by direct counting: `2 * (#smaller) + #equal + 1`.
pub fn oracle_doubled_ranks(diffs: &[i64]) -> Vec<(u64, bool)> {
    let nonzero: Vec<i64> = diffs.iter().copied().filter(|d| *d != 0).collect();
    nonzero
        .iter()
        .map(|d| {
            let smaller = nonzero.iter().filter(|x| x.abs() < d.abs()).count() as u64;
            let equal = nonzero.iter().filter(|x| x.abs() == d.abs()).count() as u64;
            (2 * smaller + equal + 1, *d > 0)
        })
        .collect()
}

/// Two-sided p by listing all `2^n` sign assignments.
pub fn enumeration_oracle(diffs: &[i64]) -> f64 {
    let ranks = oracle_doubled_ranks(diffs);
    let n = ranks.len();
    let total: u64 = ranks.iter().map(|(r, _)| r).sum();
    let w_plus: u64 = ranks.iter().filter(|(_, p)| *p).map(|(r, _)| r).sum();
    let observed = w_plus.min(total - w_plus);
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        let s: u64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i].0).sum();
        if s.min(total - s) <= observed {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

pub fn generated(seed: u64, dialect: CiDialect) -> RawConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let doc = match dialect {
        CiDialect::TravisCI => travis_config(&mut rng),
        CiDialect::GitHubActions => gha_config(&mut rng),
    };
    RawConfig::from_document(dialect, doc).unwrap()
}

/// An in-memory corpus of generated pairs with random splits.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> MigrationCorpus {
    let mut pairs = Vec::new();
    for i in 0..n {
        let t = RawConfig::from_document(CiDialect::TravisCI, travis_config(rng)).unwrap();
        let g = RawConfig::from_document(CiDialect::GitHubActions, gha_config(rng)).unwrap();
        let split = if rng.gen_bool(0.5) { Split::Train } else { Split::Test };
        let reversed = rng.gen_bool(0.3);
        let (source, reference_target, direction) = if reversed {
            (g, t, Direction::GHA_TO_TRAVIS)
        } else {
            (t, g, Direction::TRAVIS_TO_GHA)
        };
        pairs.push(MigrationPair {
            pair_id: format!("p{i:03}"),
            source,
            reference_target,
            direction,
            split,
        });
    }
    let manifest = CorpusManifest {
        schema_version: "1".into(),
        counts: ManifestCounts {
            travis_only: 0,
            gha_only: 0,
            dual: n,
        },
        split_assignment: pairs.iter().map(|p| (p.pair_id.clone(), p.split)).collect(),
        source_dialect: pairs
            .iter()
            .filter(|p| p.direction == Direction::GHA_TO_TRAVIS)
            .map(|p| (p.pair_id.clone(), CiDialect::GitHubActions))
            .collect(),
        split_seed: None,
    };
    MigrationCorpus { pairs, manifest }
}
