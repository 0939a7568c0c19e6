use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::ScoringError;
use crate::metrics::average_ranks;

/// Largest number of non-zero differences for which the p-value is exact.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// min(W+, W-)
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Wilcoxon signed-rank test on paired samples `a` and `b` (differences `a - b`).
///
/// Zero differences are dropped and tied magnitudes share their average rank.
/// Up to [`EXACT_LIMIT`] differences the null distribution of W+ is counted
/// exactly; beyond that a normal approximation with tie and continuity
/// corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, ScoringError> {
    if a.len() != b.len() {
        return Err(ScoringError::UnequalLengths(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(ScoringError::AllZeroDifferences);
    }
    let n = diffs.len();
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, statistic), true)
    } else {
        (normal_p(&ranks, statistic), false)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n,
        p_value,
        exact,
    })
}

// Averaged ranks are multiples of 1/2, so doubled ranks are integers and the
// distribution of doubled W+ can be counted by subset-sum.
fn exact_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0f64; max + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let limit = (statistic * 2.0).round() as usize;
    let tail: f64 = ways[..=limit.min(max)].iter().sum();
    (2.0 * tail / 2f64.powi(ranks.len() as i32)).min(1.0)
}

fn normal_p(ranks: &[f64], statistic: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}
