//! Segment-level text metrics: BLEU, ROUGE-1/2/L, word position deviation,
//! lexical deviation, greedy embedding similarity and Spearman correlation.
//!
//! All scores are on a `[0, 1]` scale. Token comparison is exact; callers fold
//! case beforehand (see [`crate::align::TokenizerPolicy::METRIC`]), except for
//! [`lexical_deviation`] which always compares case-folded token sets.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::lcs_len;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("input is empty")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations")]
    TooFewObservations,
    #[error("input is constant after ranking")]
    ConstantInput,
    #[error("vector dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrecisionRecallF1 {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        PrecisionRecallF1 {
            precision,
            recall,
            f1,
        }
    }

    /// Precision and recall from an overlap count and the two totals; a zero
    /// total yields zero for that side.
    pub fn from_counts(overlap: u64, candidate_total: u64, reference_total: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        PrecisionRecallF1::new(
            ratio(overlap, candidate_total),
            ratio(overlap, reference_total),
        )
    }
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        let key: Vec<&str> = w.iter().map(|t| t.as_ref()).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap with the candidate and reference totals.
pub fn ngram_overlap<T: AsRef<str>>(candidate: &[T], reference: &[T], n: usize) -> (u64, u64, u64) {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (overlap, c.values().sum(), r.values().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothing {
    None,
    /// Add one to matched and total counts for n >= 2.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl BleuConfig {
    pub const SENTENCE: BleuConfig = BleuConfig {
        max_n: 4,
        smoothing: Smoothing::AddOne,
    };
    pub const CORPUS: BleuConfig = BleuConfig {
        max_n: 4,
        smoothing: Smoothing::None,
    };
}

/// Sufficient statistics for BLEU; sums of these pool a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
    pub longest_candidate: usize,
}

impl BleuStats {
    pub fn collect<T: AsRef<str>>(candidate: &[T], reference: &[T], max_n: usize) -> Self {
        let mut s = BleuStats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: candidate.len() as u64,
            reference_len: reference.len() as u64,
            longest_candidate: candidate.len(),
        };
        for n in 1..=max_n {
            let (m, t, _) = ngram_overlap(candidate, reference, n);
            s.matches[n - 1] = m;
            s.totals[n - 1] = t;
        }
        s
    }

    pub fn add(&mut self, other: &BleuStats) {
        if self.matches.len() < other.matches.len() {
            self.matches.resize(other.matches.len(), 0);
            self.totals.resize(other.totals.len(), 0);
        }
        for (k, (m, t)) in other.matches.iter().zip(&other.totals).enumerate() {
            self.matches[k] += m;
            self.totals[k] += t;
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
        self.longest_candidate = self.longest_candidate.max(other.longest_candidate);
    }

    /// Geometric mean of modified precisions times the brevity penalty. The
    /// n-gram order is capped at the longest candidate's length.
    pub fn score(&self, smoothing: Smoothing) -> f64 {
        let order = self.matches.len().min(self.longest_candidate);
        if order == 0 || self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for k in 0..order {
            let (m, t) = (self.matches[k] as f64, self.totals[k] as f64);
            let p = match smoothing {
                Smoothing::AddOne if k > 0 => (m + 1.0) / (t + 1.0),
                _ if t == 0.0 => 0.0,
                _ => m / t,
            };
            if p == 0.0 {
                return 0.0;
            }
            log_sum += p.ln();
        }
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
        bp * (log_sum / order as f64).exp()
    }
}

/// Sentence-level BLEU with add-one smoothing for n >= 2.
pub fn bleu<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Result<f64, MetricError> {
    bleu_with(candidate, reference, BleuConfig::SENTENCE)
}

pub fn bleu_with<T: AsRef<str>>(
    candidate: &[T],
    reference: &[T],
    config: BleuConfig,
) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    Ok(BleuStats::collect(candidate, reference, config.max_n).score(config.smoothing))
}

/// Corpus BLEU: clipped counts and lengths are summed over all pairs before the
/// geometric mean. Unsmoothed.
pub fn corpus_bleu<T: AsRef<str>>(pairs: &[(Vec<T>, Vec<T>)]) -> Result<f64, MetricError> {
    corpus_bleu_with(pairs, BleuConfig::CORPUS)
}

pub fn corpus_bleu_with<T: AsRef<str>>(
    pairs: &[(Vec<T>, Vec<T>)],
    config: BleuConfig,
) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut total = BleuStats {
        matches: vec![0; config.max_n],
        totals: vec![0; config.max_n],
        ..Default::default()
    };
    for (c, r) in pairs {
        if r.is_empty() {
            return Err(MetricError::EmptyReference);
        }
        total.add(&BleuStats::collect(c, r, config.max_n));
    }
    Ok(total.score(config.smoothing))
}

pub fn rouge_n<T: AsRef<str>>(candidate: &[T], reference: &[T], n: usize) -> PrecisionRecallF1 {
    let (overlap, c, r) = ngram_overlap(candidate, reference, n.max(1));
    PrecisionRecallF1::from_counts(overlap, c, r)
}

/// ROUGE-L with beta = 1.
pub fn rouge_l<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> PrecisionRecallF1 {
    let c: Vec<&str> = candidate.iter().map(|t| t.as_ref()).collect();
    let r: Vec<&str> = reference.iter().map(|t| t.as_ref()).collect();
    let l = lcs_len(&c, &r) as u64;
    PrecisionRecallF1::from_counts(l, c.len() as u64, r.len() as u64)
}

fn norm_pos(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// Mean absolute difference of normalized positions over shared tokens.
///
/// The k-th occurrence of a token in the candidate is paired with its k-th
/// occurrence in the reference, irrespective of order. No shared tokens gives 1.
pub fn word_position_deviation<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> f64 {
    let mut ref_positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, t) in reference.iter().enumerate() {
        ref_positions.entry(t.as_ref()).or_default().push(j);
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, t) in candidate.iter().enumerate() {
        let t = t.as_ref();
        let k = seen.entry(t).or_insert(0);
        if let Some(&j) = ref_positions.get(t).and_then(|v| v.get(*k)) {
            sum += (norm_pos(i, candidate.len()) - norm_pos(j, reference.len())).abs();
            count += 1;
        }
        *k += 1;
    }
    if count == 0 {
        1.0
    } else {
        sum / count as f64
    }
}

/// One minus the Jaccard overlap of case-folded token sets; 0 when both are empty.
pub fn lexical_deviation<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> f64 {
    let a: HashSet<String> = candidate.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let b: HashSet<String> = reference.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(&b).count() as f64 / union as f64
}

/// Greedy cosine matching between two sets of token vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingMatch {
    /// `cosine[i][j]` compares reference token `i` with candidate token `j`.
    pub cosine: Vec<Vec<f64>>,
    pub scores: PrecisionRecallF1,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn embedding_greedy_similarity(
    candidate: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<EmbeddingMatch, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let dim = reference[0].len();
    for v in candidate.iter().chain(reference) {
        if v.len() != dim {
            return Err(MetricError::DimensionMismatch(dim, v.len()));
        }
    }
    let matrix: Vec<Vec<f64>> = reference
        .iter()
        .map(|r| candidate.iter().map(|c| cosine(r, c)).collect())
        .collect();
    let recall = matrix
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    let precision = (0..candidate.len())
        .map(|j| {
            matrix
                .iter()
                .map(|row| row[j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / candidate.len() as f64;
    Ok(EmbeddingMatch {
        cosine: matrix,
        scores: PrecisionRecallF1::new(precision, recall),
    })
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::TooFewObservations);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of tie-averaged ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::TooFewObservations);
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Lexical metrics addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Bleu,
    Rouge1,
    Rouge2,
    #[serde(rename = "rougeL")]
    RougeL,
    Wpd,
    Ld,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Bleu,
        MetricName::Rouge1,
        MetricName::Rouge2,
        MetricName::RougeL,
        MetricName::Wpd,
        MetricName::Ld,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Bleu => "bleu",
            MetricName::Rouge1 => "rouge1",
            MetricName::Rouge2 => "rouge2",
            MetricName::RougeL => "rougeL",
            MetricName::Wpd => "wpd",
            MetricName::Ld => "ld",
        }
    }

    /// Total version of the metric for possibly empty segments: BLEU of an empty
    /// reference is 1 against an empty candidate and 0 otherwise.
    pub fn score<T: AsRef<str>>(&self, candidate: &[T], reference: &[T]) -> f64 {
        match self {
            MetricName::Bleu => bleu(candidate, reference)
                .unwrap_or(if candidate.is_empty() { 1.0 } else { 0.0 }),
            MetricName::Rouge1 => rouge_n(candidate, reference, 1).f1,
            MetricName::Rouge2 => rouge_n(candidate, reference, 2).f1,
            MetricName::RougeL => rouge_l(candidate, reference).f1,
            MetricName::Wpd => word_position_deviation(candidate, reference),
            MetricName::Ld => lexical_deviation(candidate, reference),
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "bleu" => Ok(MetricName::Bleu),
            "rouge1" | "rouge-1" => Ok(MetricName::Rouge1),
            "rouge2" | "rouge-2" => Ok(MetricName::Rouge2),
            "rougel" | "rouge-l" => Ok(MetricName::RougeL),
            "wpd" => Ok(MetricName::Wpd),
            "ld" => Ok(MetricName::Ld),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

/// Full metric profile of one candidate against one reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub bleu: f64,
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
    pub wpd: f64,
    pub ld: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub embed_sim: Option<f64>,
}

impl MetricVector {
    pub fn compute<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> Self {
        MetricVector {
            bleu: MetricName::Bleu.score(candidate, reference),
            rouge1_f: rouge_n(candidate, reference, 1).f1,
            rouge2_f: rouge_n(candidate, reference, 2).f1,
            rouge_l_f: rouge_l(candidate, reference).f1,
            wpd: word_position_deviation(candidate, reference),
            ld: lexical_deviation(candidate, reference),
            embed_sim: None,
        }
    }

    /// The profile of a segment with no counterpart at all.
    pub fn zero() -> Self {
        MetricVector {
            bleu: 0.0,
            rouge1_f: 0.0,
            rouge2_f: 0.0,
            rouge_l_f: 0.0,
            wpd: 1.0,
            ld: 1.0,
            embed_sim: None,
        }
    }
}
