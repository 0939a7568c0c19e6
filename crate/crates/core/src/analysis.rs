//! Correlation of paraphrase types through their metric profiles.
//!
//! Two readings are available:
//!
//! - [`Mode::Cooccur`] (default): for two labels `a` and `b`, take every pair in
//!   which both occur, evaluate each metric on the concatenated segments of `a`
//!   and of `b`, and correlate the two value sequences across pairs with
//!   Spearman's rho. The entry is the mean rho over the metrics.
//! - [`Mode::Profile`]: average each label's metric values over all its pairs
//!   and correlate the two mean vectors across metrics.
//!
//! Segments are scored with the second sentence's tokens as candidate and the
//! first sentence's tokens as reference, case-folded.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedPair, Corpus};
use crate::metrics::{spearman, MetricName};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("corpus has no typed annotations")]
    UntypedCorpus,
    #[error("at least one metric is required")]
    NoMetrics,
    #[error("min_joint must be at least 3, got {0}")]
    MinJointTooSmall(usize),
    #[error("need at least two defined off-diagonal entries, found {0}")]
    TooFewEntries(usize),
    #[error("off-diagonal entries are constant")]
    ConstantEntries,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Type,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Cooccur,
    Profile,
}

#[derive(Debug, Clone)]
pub struct CorrelationOptions {
    pub metrics: Vec<MetricName>,
    pub level: Level,
    pub mode: Mode,
    pub min_joint: usize,
    pub jobs: usize,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            metrics: vec![MetricName::Wpd, MetricName::Ld],
            level: Level::Type,
            mode: Mode::Cooccur,
            min_joint: 5,
            jobs: 1,
        }
    }
}

pub type Matrix = Vec<Vec<Option<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub level: Level,
    pub mode: Mode,
    pub metrics: Vec<String>,
    /// Sentences supporting each entry (co-occurrences, or for the profile
    /// mode the smaller of the two labels' sentence counts).
    pub support: Vec<Vec<usize>>,
    /// Mean Spearman rho; `None` where data is insufficient.
    pub raw: Matrix,
    pub rescaled: Option<Matrix>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
}

// metric values of one label's concatenated segments in one pair
struct Observation {
    pair: usize,
    values: Vec<f64>,
}

fn label_of(pair_type: crate::TypeId, corpus: &Corpus, level: Level) -> Option<String> {
    let tax = &corpus.taxonomy;
    let t = tax.lookup(pair_type).ok()?;
    Some(match level {
        Level::Type => t.name.clone(),
        Level::Group => tax.group_name(t.group).to_string(),
    })
}

fn observe(pair: &AnnotatedPair, corpus: &Corpus, level: Level, metrics: &[MetricName]) -> BTreeMap<String, Vec<f64>> {
    let mut spans: BTreeMap<String, (BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
    for a in &pair.annotations {
        if let Some(label) = label_of(a.type_id, corpus, level) {
            let entry = spans.entry(label).or_default();
            entry.0.extend(a.span1.range());
            entry.1.extend(a.span2.range());
        }
    }
    spans
        .into_iter()
        .map(|(label, (p1, p2))| {
            let reference: Vec<String> = p1.iter().map(|&i| pair.s1.tokens[i].to_lowercase()).collect();
            let candidate: Vec<String> = p2.iter().map(|&j| pair.s2.tokens[j].to_lowercase()).collect();
            let values = metrics.iter().map(|m| m.score(&candidate, &reference)).collect();
            (label, values)
        })
        .collect()
}

fn cooccur_entry(a: &[Observation], b: &[Observation], metric_count: usize, min_joint: usize) -> (usize, Option<f64>) {
    let mut i = 0;
    let mut joint: Vec<(&[f64], &[f64])> = Vec::new();
    for ob in b {
        while i < a.len() && a[i].pair < ob.pair {
            i += 1;
        }
        if i < a.len() && a[i].pair == ob.pair {
            joint.push((&a[i].values, &ob.values));
        }
    }
    if joint.len() < min_joint {
        return (joint.len(), None);
    }
    let rhos: Vec<f64> = (0..metric_count)
        .filter_map(|m| {
            let xs: Vec<f64> = joint.iter().map(|(x, _)| x[m]).collect();
            let ys: Vec<f64> = joint.iter().map(|(_, y)| y[m]).collect();
            spearman(&xs, &ys).ok()
        })
        .collect();
    let entry = (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64);
    (joint.len(), entry)
}

fn profile(obs: &[Observation], metric_count: usize) -> Vec<f64> {
    (0..metric_count)
        .map(|m| obs.iter().map(|o| o.values[m]).sum::<f64>() / obs.len() as f64)
        .collect()
}

/// Builds the raw correlation matrix over the labels that occur in `corpus`.
/// The diagonal is 1; entries supported by fewer than `min_joint` sentences
/// are `None`.
pub fn correlation_matrix(corpus: &Corpus, options: &CorrelationOptions) -> Result<CorrelationMatrix, AnalysisError> {
    if options.metrics.is_empty() {
        return Err(AnalysisError::NoMetrics);
    }
    if options.min_joint < 3 {
        return Err(AnalysisError::MinJointTooSmall(options.min_joint));
    }
    if !corpus.is_typed() {
        return Err(AnalysisError::UntypedCorpus);
    }
    let m = options.metrics.len();
    let mut by_label: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    for (k, pair) in corpus.pairs.iter().enumerate() {
        for (label, values) in observe(pair, corpus, options.level, &options.metrics) {
            by_label.entry(label).or_default().push(Observation { pair: k, values });
        }
    }
    let labels: Vec<String> = by_label.keys().cloned().collect();
    let obs: Vec<&Vec<Observation>> = by_label.values().collect();
    let n = labels.len();
    let profiles: Vec<Vec<f64>> = obs.iter().map(|o| profile(o, m)).collect();

    let entry = |a: usize, b: usize| -> (usize, Option<f64>) {
        match options.mode {
            Mode::Cooccur => cooccur_entry(obs[a], obs[b], m, options.min_joint),
            Mode::Profile => {
                let support = obs[a].len().min(obs[b].len());
                if support < options.min_joint {
                    (support, None)
                } else {
                    (support, spearman(&profiles[a], &profiles[b]).ok())
                }
            }
        }
    };

    let cells: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let jobs = options.jobs.max(1).min(cells.len().max(1));
    let chunk = cells.len().div_ceil(jobs).max(1);
    let results: Vec<(usize, Option<f64>)> = std::thread::scope(|s| {
        let handles: Vec<_> = cells
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&(a, b)| entry(a, b)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("correlation worker panicked"))
            .collect()
    });

    let mut raw = vec![vec![None; n]; n];
    let mut support = vec![vec![0; n]; n];
    for (k, obs_k) in obs.iter().enumerate() {
        raw[k][k] = Some(1.0);
        support[k][k] = obs_k.len();
    }
    for (&(a, b), (count, value)) in cells.iter().zip(results) {
        raw[a][b] = value;
        raw[b][a] = value;
        support[a][b] = count;
        support[b][a] = count;
    }
    Ok(CorrelationMatrix {
        labels,
        level: options.level,
        mode: options.mode,
        metrics: options.metrics.iter().map(|m| m.as_str().to_string()).collect(),
        support,
        raw,
        rescaled: None,
        mu: None,
        sigma: None,
    })
}

fn off_diagonal(m: &Matrix) -> Vec<f64> {
    m.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).filter_map(|(_, v)| *v))
        .collect()
}

/// Mean of the defined off-diagonal raw entries.
pub fn mean_off_diagonal(matrix: &CorrelationMatrix) -> Option<f64> {
    let xs = off_diagonal(&matrix.raw);
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Z-normalizes the matrix with the mean and population standard deviation of
/// its defined off-diagonal raw entries.
pub fn rescale(matrix: &CorrelationMatrix) -> Result<CorrelationMatrix, AnalysisError> {
    let xs = off_diagonal(&matrix.raw);
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewEntries(xs.len()));
    }
    let mu = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / xs.len() as f64;
    let sigma = var.sqrt();
    if sigma <= f64::EPSILON * mu.abs().max(1.0) {
        return Err(AnalysisError::ConstantEntries);
    }
    let mut out = matrix.clone();
    out.rescaled = Some(
        matrix
            .raw
            .iter()
            .map(|row| row.iter().map(|v| v.map(|x| (x - mu) / sigma)).collect())
            .collect(),
    );
    out.mu = Some(mu);
    out.sigma = Some(sigma);
    Ok(out)
}

impl CorrelationMatrix {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }

    /// Square CSV with a label header row and column; rescaled values when
    /// available, raw otherwise; missing entries are empty cells.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalysisError> {
        let values = self.rescaled.as_ref().unwrap_or(&self.raw);
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(values) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.raw[self.index_of(a)?][self.index_of(b)?]
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::SegmentAnnotation;
    use crate::span::Span;
    use crate::taxonomy::{names, Taxonomy};
    use crate::TypeId;

    fn tax() -> Arc<Taxonomy> {
        Arc::new(Taxonomy::default())
    }

    // pair k: s1 "w0 .. w9", s2 keeps the first `keep_a` tokens of segment A
    // (positions 0..4) and `keep_b` of segment B (positions 5..9)
    fn pair(k: usize, keep_a: usize, keep_b: usize, a: TypeId, b: TypeId) -> AnnotatedPair {
        let s1: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let mut s2: Vec<String> = Vec::new();
        for i in 0..4 {
            s2.push(if i < keep_a { s1[i].clone() } else { format!("x{i}") });
        }
        s2.push(s1[4].clone());
        for i in 5..9 {
            s2.push(if i - 5 < keep_b { s1[i].clone() } else { format!("y{i}") });
        }
        s2.push(s1[9].clone());
        AnnotatedPair::new(
            format!("p{k}"),
            &s1.join(" "),
            &s2.join(" "),
            true,
            vec![
                SegmentAnnotation::new(1, a, Span::new(0, 4), Span::new(0, 4)),
                SegmentAnnotation::new(2, b, Span::new(5, 9), Span::new(5, 9)),
            ],
        )
    }

    fn opts(metrics: Vec<MetricName>) -> CorrelationOptions {
        CorrelationOptions {
            metrics,
            ..Default::default()
        }
    }

    #[test]
    fn identical_segments_correlate_perfectly() {
        let t = tax();
        let (a, b) = (t.id_of(names::SPELLING), t.id_of(names::PUNCTUATION));
        let pairs = (0..6).map(|k| pair(k, k % 5, k % 5, a, b)).collect();
        let c = Corpus::new("c", pairs, t).unwrap();
        let m = correlation_matrix(&c, &opts(vec![MetricName::Ld, MetricName::Rouge1])).unwrap();
        assert_eq!(m.labels.len(), 2);
        assert!((m.get(names::SPELLING, names::PUNCTUATION).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.raw[0][0], Some(1.0));
    }

    #[test]
    fn opposite_trends_correlate_negatively() {
        let t = tax();
        let (a, b) = (t.id_of(names::SPELLING), t.id_of(names::PUNCTUATION));
        let pairs = (0..5).map(|k| pair(k, k, 4 - k, a, b)).collect();
        let c = Corpus::new("c", pairs, t).unwrap();
        let m = correlation_matrix(&c, &opts(vec![MetricName::Ld])).unwrap();
        assert!((m.get(names::SPELLING, names::PUNCTUATION).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_pairs_are_missing() {
        let t = tax();
        let (a, b) = (t.id_of(names::SPELLING), t.id_of(names::PUNCTUATION));
        let pairs = (0..4).map(|k| pair(k, k, k, a, b)).collect();
        let c = Corpus::new("c", pairs, t).unwrap();
        let m = correlation_matrix(&c, &opts(vec![MetricName::Ld])).unwrap();
        assert_eq!(m.raw[0][1], None);
        assert_eq!(m.support[0][1], 4);
        assert!(matches!(rescale(&m), Err(AnalysisError::TooFewEntries(0))));
    }

    #[test]
    fn rescale_two_point() {
        let m = CorrelationMatrix {
            labels: vec!["a".into(), "b".into(), "c".into()],
            level: Level::Type,
            mode: Mode::Cooccur,
            metrics: vec![],
            support: vec![vec![0; 3]; 3],
            raw: vec![
                vec![Some(1.0), Some(0.8), None],
                vec![Some(0.8), Some(1.0), Some(1.0)],
                vec![None, Some(1.0), Some(1.0)],
            ],
            rescaled: None,
            mu: None,
            sigma: None,
        };
        let r = rescale(&m).unwrap();
        let z = r.rescaled.as_ref().unwrap();
        assert!((z[0][1].unwrap() + 1.0).abs() < 1e-12);
        assert!((z[1][2].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(z[0][2], None);
        assert!((r.mu.unwrap() - 0.9).abs() < 1e-12);
        let csv = r.to_csv();
        assert!(csv.starts_with(",a,b,c\n"));
        assert!(csv.contains("\na,"));

        let mut flat = m.clone();
        flat.raw[1][2] = Some(0.8);
        flat.raw[2][1] = Some(0.8);
        assert!(matches!(rescale(&flat), Err(AnalysisError::ConstantEntries)));
    }

    #[test]
    fn errors() {
        let t = tax();
        let c = Corpus::new("c", vec![AnnotatedPair::new("p", "a", "b", true, vec![])], t).unwrap();
        assert!(matches!(
            correlation_matrix(&c, &CorrelationOptions::default()),
            Err(AnalysisError::UntypedCorpus)
        ));
        let bad = CorrelationOptions {
            min_joint: 2,
            ..Default::default()
        };
        assert!(matches!(correlation_matrix(&c, &bad), Err(AnalysisError::MinJointTooSmall(2))));
        assert!(matches!(correlation_matrix(&c, &opts(vec![])), Err(AnalysisError::NoMetrics)));
    }
}
