//! Two-sided Wilcoxon signed-rank test for paired samples.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::MetricsError;

/// Largest effective sample size tested by exact enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult<F> {
    /// `min(W+, W-)`.
    pub statistic: F,
    pub p_value: F,
    pub n_effective: usize,
    pub w_plus: F,
    pub w_minus: F,
    pub method: PValueMethod,
}

/// Signed ranks of the non-zero differences: absolute values ranked from 1
/// with ties sharing their average rank. Returned as doubled ranks so
/// half ranks stay integral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRanks {
    pub doubled: Vec<u64>,
    pub positive: Vec<bool>,
    /// Sizes of tie groups among the absolute differences.
    pub ties: Vec<usize>,
}

impl SignedRanks {
    pub fn from_diffs<F: Float>(diffs: &[F]) -> Self {
        let mut nonzero: Vec<F> = diffs.iter().copied().filter(|d| !d.is_zero()).collect();
        nonzero.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("differences are not NaN"));
        let mut doubled = Vec::with_capacity(nonzero.len());
        let mut ties = Vec::new();
        let mut i = 0;
        while i < nonzero.len() {
            let mut j = i + 1;
            while j < nonzero.len() && nonzero[j].abs() == nonzero[i].abs() {
                j += 1;
            }
            // Ranks i+1..=j average to (i + 1 + j) / 2.
            let avg_doubled = (i + 1 + j) as u64;
            doubled.extend(std::iter::repeat_n(avg_doubled, j - i));
            ties.push(j - i);
            i = j;
        }
        Self {
            doubled,
            positive: nonzero.iter().map(|d| *d > F::zero()).collect(),
            ties,
        }
    }

    pub fn len(&self) -> usize {
        self.doubled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doubled.is_empty()
    }

    /// Doubled `W+`.
    pub fn w_plus_doubled(&self) -> u64 {
        self.doubled.iter().zip(&self.positive).filter(|(_, p)| **p).map(|(r, _)| r).sum()
    }

    pub fn total_doubled(&self) -> u64 {
        self.doubled.iter().sum()
    }
}

/// Two-sided exact p-value: the share of the `2^n` equally likely sign
/// assignments whose `min(W+, W-)` is at most the observed one.
pub fn exact_p<F: Float + FromPrimitive>(ranks: &SignedRanks) -> F {
    let total = ranks.total_doubled() as usize;
    // counts[s] = number of sign assignments with doubled W+ = s.
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &ranks.doubled {
        let r = r as usize;
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let w_plus = ranks.w_plus_doubled() as usize;
    let observed = w_plus.min(total - w_plus);
    let extreme: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s).min(total - s) <= observed)
        .map(|(_, c)| c)
        .sum();
    let p = extreme / 2f64.powi(ranks.len() as i32);
    F::from_f64(p.min(1.0)).unwrap()
}

/// Two-sided p-value from the normal approximation with tie correction and
/// no continuity correction.
pub fn normal_p<F: Float + FromPrimitive>(ranks: &SignedRanks) -> F {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = ranks.ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    let w_plus = ranks.w_plus_doubled() as f64 / 2.0;
    let w = w_plus.min(ranks.total_doubled() as f64 / 2.0 - w_plus);
    let z = (w - mean) / variance.sqrt();
    let standard = Normal::standard();
    let p = 2.0 * standard.cdf(-z.abs());
    F::from_f64(p.min(1.0)).unwrap()
}

/// Runs the test on paired scores.
pub fn wilcoxon_signed_rank<F: Float + FromPrimitive + ToPrimitive>(
    scores_a: &[F],
    scores_b: &[F],
) -> Result<WilcoxonResult<F>, MetricsError> {
    if scores_a.len() != scores_b.len() {
        return Err(MetricsError::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    let diffs: Vec<F> = scores_a.iter().zip(scores_b).map(|(a, b)| *a - *b).collect();
    wilcoxon_from_diffs(&diffs)
}

/// Runs the test on precomputed paired differences.
pub fn wilcoxon_from_diffs<F: Float + FromPrimitive>(diffs: &[F]) -> Result<WilcoxonResult<F>, MetricsError> {
    let ranks = SignedRanks::from_diffs(diffs);
    if ranks.is_empty() {
        return Err(MetricsError::AllZeroDiffs);
    }
    let two = F::from_u8(2).unwrap();
    let w_plus = F::from_u64(ranks.w_plus_doubled()).unwrap() / two;
    let w_minus = F::from_u64(ranks.total_doubled() - ranks.w_plus_doubled()).unwrap() / two;
    let (p_value, method) = if ranks.len() <= EXACT_LIMIT {
        (exact_p(&ranks), PValueMethod::Exact)
    } else {
        (normal_p(&ranks), PValueMethod::NormalApproximation)
    };
    Ok(WilcoxonResult {
        statistic: w_plus.min(w_minus),
        p_value,
        n_effective: ranks.len(),
        w_plus,
        w_minus,
        method,
    })
}
