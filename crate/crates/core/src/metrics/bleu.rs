//! N-gram profiles, trivially shared n-grams and CrystalBLEU.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::MetricsError;
use crate::normalize::TokenSequence;

pub type NGram = Vec<String>;

/// Default highest n-gram order.
pub const DEFAULT_N_MAX: usize = 4;
/// Default size of the trivially shared set.
pub const DEFAULT_TRIVIAL_K: usize = 500;

/// N-gram counts of one token sequence, orders `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    pub n_max: usize,
    pub counts: BTreeMap<NGram, usize>,
    pub total_per_order: BTreeMap<usize, usize>,
}

impl NGramProfile {
    pub fn new(tokens: &[String], n_max: usize) -> Self {
        let mut counts = BTreeMap::new();
        let mut total_per_order = BTreeMap::new();
        for n in 1..=n_max {
            for window in tokens.windows(n) {
                *counts.entry(window.to_vec()).or_insert(0) += 1;
                *total_per_order.entry(n).or_insert(0) += 1;
            }
        }
        Self {
            n_max,
            counts,
            total_per_order,
        }
    }

    /// Drops every n-gram in `trivial`, adjusting per-order totals.
    pub fn without(mut self, trivial: &TriviallySharedSet) -> Self {
        for ngram in &trivial.ngrams {
            if let Some(count) = self.counts.remove(ngram) {
                let total = self.total_per_order.get_mut(&ngram.len()).expect("order present");
                *total -= count;
            }
        }
        self
    }

    pub fn total(&self, n: usize) -> usize {
        self.total_per_order.get(&n).copied().unwrap_or(0)
    }
}

/// The `k` most frequent n-grams of a background corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriviallySharedSet {
    pub ngrams: BTreeSet<NGram>,
    pub k: usize,
    pub source_corpus_id: String,
}

impl TriviallySharedSet {
    pub fn empty() -> Self {
        Self::default()
    }
}

/// Pools n-gram frequencies (orders `1..=n_max`) across `corpus` and keeps
/// the `k` most frequent; equal frequencies are ordered lexicographically.
pub fn build_trivially_shared(
    corpus: &[TokenSequence],
    k: usize,
    n_max: usize,
) -> Result<TriviallySharedSet, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut pooled: BTreeMap<NGram, usize> = BTreeMap::new();
    let mut hasher = Sha256::new();
    for seq in corpus {
        for (ngram, count) in NGramProfile::new(seq.tokens(), n_max).counts {
            *pooled.entry(ngram).or_insert(0) += count;
        }
        for token in seq {
            hasher.update(token.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([1u8]);
    }
    let mut ranked: Vec<(NGram, usize)> = pooled.into_iter().collect();
    // BTreeMap iteration is already lexicographic, so a stable sort by
    // descending frequency gives the documented tie-break.
    ranked.sort_by_key(|entry| std::cmp::Reverse(entry.1));
    Ok(TriviallySharedSet {
        ngrams: ranked.into_iter().take(k).map(|(g, _)| g).collect(),
        k,
        source_corpus_id: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// Strict BLEU: any zero precision gives a zero score.
    #[default]
    None,
    /// `(matches + 1) / (total + 1)` for orders two and up.
    AddOne,
}

/// Per-order clipped matches and candidate totals after deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuDetail<F> {
    pub score: F,
    pub matched: Vec<usize>,
    pub totals: Vec<usize>,
    pub brevity_penalty: F,
    pub candidate_len: usize,
    pub reference_len: usize,
}

/// CrystalBLEU with full per-order breakdown.
pub fn crystal_bleu_detail<F: Float + FromPrimitive>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    trivial: &TriviallySharedSet,
    n_max: usize,
    smoothing: Smoothing,
) -> BleuDetail<F> {
    let cand = NGramProfile::new(candidate.tokens(), n_max).without(trivial);
    let refp = NGramProfile::new(reference.tokens(), n_max).without(trivial);
    let mut matched = Vec::with_capacity(n_max);
    let mut totals = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let m: usize = cand
            .counts
            .iter()
            .filter(|(g, _)| g.len() == n)
            .map(|(g, &c)| c.min(refp.counts.get(g).copied().unwrap_or(0)))
            .sum();
        matched.push(m);
        totals.push(cand.total(n));
    }
    let (c, r) = (cand.total(1), refp.total(1));
    let brevity_penalty = brevity_penalty::<F>(c, r);
    let score = bleu_score(&matched, &totals, brevity_penalty, smoothing);
    BleuDetail {
        score,
        matched,
        totals,
        brevity_penalty,
        candidate_len: c,
        reference_len: r,
    }
}

/// CrystalBLEU score in `[0, 1]`.
pub fn crystal_bleu<F: Float + FromPrimitive>(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    trivial: &TriviallySharedSet,
    n_max: usize,
) -> F {
    crystal_bleu_detail(candidate, reference, trivial, n_max, Smoothing::None).score
}

/// `min(1, e^(1 - r/c))`; zero for an empty candidate.
fn brevity_penalty<F: Float + FromPrimitive>(c: usize, r: usize) -> F {
    if c == 0 {
        return F::zero();
    }
    if c > r {
        return F::one();
    }
    let ratio = F::from_usize(r).unwrap() / F::from_usize(c).unwrap();
    (F::one() - ratio).exp().min(F::one())
}

fn bleu_score<F: Float + FromPrimitive>(matched: &[usize], totals: &[usize], bp: F, smoothing: Smoothing) -> F {
    let n_max = matched.len();
    if n_max == 0 || totals[0] == 0 {
        return F::zero();
    }
    let weight = F::one() / F::from_usize(n_max).unwrap();
    let mut log_sum = F::zero();
    for (i, (&m, &t)) in matched.iter().zip(totals).enumerate() {
        let (m, t) = match smoothing {
            Smoothing::AddOne if i > 0 => (m + 1, t + 1),
            _ => (m, t),
        };
        if m == 0 || t == 0 {
            return F::zero();
        }
        let p = F::from_usize(m).unwrap() / F::from_usize(t).unwrap();
        log_sum = log_sum + weight * p.ln();
    }
    bp * log_sum.exp()
}
