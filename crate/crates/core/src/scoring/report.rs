use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use super::{score_detection, DetectionOptions, DetectionScore, Prediction, ScoringError};
use crate::corpus::Corpus;
use crate::metrics::PrecisionRecallF1;
use crate::taxonomy::GroupId;

/// Accuracy restricted to one type or one family.
///
/// `weight` is the share of the corpus mean carried by this row, so that
/// `sum(weight * type_acc)` over all type rows equals [`Report::type_acc`]
/// (and likewise for group rows and `group_acc`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub name: String,
    pub count: u64,
    pub pairs: u64,
    pub weight: f64,
    pub type_acc: f64,
    pub group_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub pairs: usize,
    pub typed_pairs: usize,
    pub binary_accuracy: f64,
    /// Paraphrase-class F1, the usual figure for untyped binary corpora.
    pub binary: PrecisionRecallF1,
    pub type_acc: Option<f64>,
    pub group_acc: Option<f64>,
    pub per_type: Vec<BreakdownRow>,
    pub per_group: Vec<BreakdownRow>,
}

#[derive(Default)]
struct Acc {
    count: u64,
    pairs: u64,
    weight: f64,
    type_sum: f64,
    group_sum: f64,
}

impl Acc {
    fn row(&self, name: String, typed_pairs: f64) -> BreakdownRow {
        BreakdownRow {
            name,
            count: self.count,
            pairs: self.pairs,
            weight: self.weight / typed_pairs,
            type_acc: self.type_sum / self.weight,
            group_acc: self.group_sum / self.weight,
        }
    }
}

/// Folds per-pair scores into corpus means and breakdowns. `scores[k]` must
/// belong to `corpus.pairs[k]`.
pub fn aggregate_detection(scores: &[DetectionScore], corpus: &Corpus) -> Result<Report, ScoringError> {
    if scores.len() != corpus.len() {
        return Err(ScoringError::LengthMismatch {
            scores: scores.len(),
            pairs: corpus.len(),
        });
    }
    for (k, (s, p)) in scores.iter().zip(&corpus.pairs).enumerate() {
        if s.pair_id != p.id {
            return Err(ScoringError::PairMismatch {
                index: k,
                expected: p.id.clone(),
                found: s.pair_id.clone(),
            });
        }
    }
    let tax = &corpus.taxonomy;
    let n = scores.len();
    let correct: u64 = scores.iter().map(|s| s.binary as u64).sum();
    let tp = scores.iter().filter(|s| s.gold_binary && s.pred_binary).count() as u64;
    let pred_pos = scores.iter().filter(|s| s.pred_binary).count() as u64;
    let gold_pos = scores.iter().filter(|s| s.gold_binary).count() as u64;

    let typed: Vec<&DetectionScore> = scores.iter().filter(|s| s.type_acc.is_some()).collect();
    let mean = |f: fn(&DetectionScore) -> Option<f64>| {
        (!typed.is_empty()).then(|| typed.iter().filter_map(|s| f(s)).sum::<f64>() / typed.len() as f64)
    };

    let mut by_type: BTreeMap<crate::TypeId, Acc> = BTreeMap::new();
    let mut by_group: BTreeMap<GroupId, Acc> = BTreeMap::new();
    for s in &typed {
        let mut groups_seen = Vec::new();
        for c in &s.credits {
            let g = tax.group_of(c.type_id).map_err(|_| ScoringError::UnknownType(c.type_id.0))?;
            for (acc, first) in [
                (by_type.entry(c.type_id).or_default(), true),
                (by_group.entry(g).or_default(), !groups_seen.contains(&g)),
            ] {
                acc.count += c.gold as u64;
                acc.pairs += first as u64;
                acc.weight += c.weight;
                acc.type_sum += c.weight * c.type_acc();
                acc.group_sum += c.weight * c.group_acc();
            }
            groups_seen.push(g);
        }
    }
    let tp_f = typed.len() as f64;
    Ok(Report {
        pairs: n,
        typed_pairs: typed.len(),
        binary_accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        binary: PrecisionRecallF1::from_counts(tp, pred_pos, gold_pos),
        type_acc: mean(|s| s.type_acc),
        group_acc: mean(|s| s.group_acc),
        per_type: by_type
            .iter()
            .map(|(t, a)| a.row(tax.name_of(*t).unwrap_or("?").to_string(), tp_f))
            .collect(),
        per_group: by_group
            .iter()
            .map(|(g, a)| a.row(tax.group_name(*g).to_string(), tp_f))
            .collect(),
    })
}

/// Scores every corpus pair against its prediction (looked up by pair id)
/// and aggregates.
pub fn evaluate_detection(
    corpus: &Corpus,
    predictions: &HashMap<String, Prediction>,
    options: DetectionOptions,
) -> Result<(Vec<DetectionScore>, Report), ScoringError> {
    let scores = corpus
        .pairs
        .iter()
        .map(|p| {
            let pred = predictions
                .get(&p.id)
                .ok_or_else(|| ScoringError::MissingPrediction(p.id.clone()))?;
            score_detection(p, pred, &corpus.taxonomy, options)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = aggregate_detection(&scores, corpus)?;
    Ok((scores, report))
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV with columns `metric,count,value`: the corpus means first, then
    /// one row per type and per family.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ScoringError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| ScoringError::Io(e.into());
        w.write_record(["metric", "count", "value"]).map_err(io)?;
        let mut row = |metric: &str, count: u64, value: f64| {
            w.write_record([metric.to_string(), count.to_string(), value.to_string()])
        };
        row("binary_accuracy", self.pairs as u64, self.binary_accuracy).map_err(io)?;
        row("binary_f1", self.pairs as u64, self.binary.f1).map_err(io)?;
        if let (Some(t), Some(g)) = (self.type_acc, self.group_acc) {
            row("type_acc", self.typed_pairs as u64, t).map_err(io)?;
            row("group_acc", self.typed_pairs as u64, g).map_err(io)?;
        }
        for r in &self.per_type {
            row(&format!("type_acc:{}", r.name), r.count, r.type_acc).map_err(io)?;
        }
        for r in &self.per_group {
            row(&format!("group_acc:{}", r.name), r.count, r.group_acc).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
