//! Task scoring.
//!
//! Detection is scored per pair at three granularities (binary, type, group)
//! and averaged into a [`Report`]. Generation is scored per gold segment with
//! the full [`MetricVector`](crate::metrics::MetricVector) and pooled per pair.
//! [`wilcoxon_signed_rank`] compares two systems on paired scores.
//!
//! Type matching is location-free by default: a prediction of type `t` earns
//! credit for one gold (segment, type) unit of type `t`, wherever it sits. Each
//! distinct gold type gets one vote in the pair's score.

mod generation;
mod prediction;
mod report;
mod wilcoxon;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedPair;
use crate::metrics::MetricError;
use crate::span::Span;
use crate::taxonomy::{GroupId, Taxonomy, TypeId};

pub use generation::{aggregate_generation, score_generation, GenerationReport, GenerationScore, PooledScores, SegmentScore};
pub use prediction::{
    parse_generation_predictions, parse_predictions, read_generation_predictions, read_predictions,
    GenerationRecord, PredictedRecordAnnotation, PredictionRecord,
};
pub use report::{aggregate_detection, evaluate_detection, BreakdownRow, Report};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("unknown type id {0}")]
    UnknownType(u16),
    #[error("unknown group {0:?}")]
    UnknownGroup(String),
    #[error("{scores} scores for {pairs} pairs")]
    LengthMismatch { scores: usize, pairs: usize },
    #[error("score {index} belongs to pair {found:?}, expected {expected:?}")]
    PairMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("no prediction for pair {0:?}")]
    MissingPrediction(String),
    #[error("generated sentence for pair {0:?} is empty")]
    EmptyGenerated(String),
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("input lengths differ: {0} vs {1}")]
    UnequalLengths(usize, usize),
    #[error("invalid gold pair: {0}")]
    InvalidGold(String),
    #[error("prediction file line {line}: {message}")]
    PredictionFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// How a pair's per-type accuracies are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Every distinct gold type gets one equal vote.
    #[default]
    Uniform,
    /// Every gold occurrence gets one vote.
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Match by (segment multiplicity, type), ignoring positions.
    #[default]
    LocationFree,
    /// Additionally require identical spans in both sentences.
    StrictSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionOptions {
    pub weighting: Weighting,
    pub mode: MatchMode,
}

/// A predicted label is either a leaf type or a whole family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Type(TypeId),
    Group(GroupId),
}

/// One predicted annotation. Segment id and spans are optional: a predictor
/// may name a type without locating it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictedLabel {
    pub segment_id: Option<u32>,
    pub label: Label,
    pub span1: Option<Span>,
    pub span2: Option<Span>,
}

impl PredictedLabel {
    pub fn of_type(type_id: TypeId) -> Self {
        PredictedLabel {
            segment_id: None,
            label: Label::Type(type_id),
            span1: None,
            span2: None,
        }
    }

    pub fn of_group(group: GroupId) -> Self {
        PredictedLabel {
            segment_id: None,
            label: Label::Group(group),
            span1: None,
            span2: None,
        }
    }
}

impl From<&crate::corpus::SegmentAnnotation> for PredictedLabel {
    fn from(a: &crate::corpus::SegmentAnnotation) -> Self {
        PredictedLabel {
            segment_id: Some(a.segment_id),
            label: Label::Type(a.type_id),
            span1: Some(a.span1),
            span2: Some(a.span2),
        }
    }
}

/// Everything a detector says about one pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub is_paraphrase: bool,
    pub labels: Vec<PredictedLabel>,
}

impl Prediction {
    /// A prediction that repeats the gold annotations and label.
    pub fn from_gold(pair: &AnnotatedPair) -> Self {
        Prediction {
            is_paraphrase: pair.is_paraphrase,
            labels: pair.annotations.iter().map(PredictedLabel::from).collect(),
        }
    }

    /// Builds a prediction from annotations alone; the pair is called a
    /// paraphrase unless some label is the Non-paraphrase type.
    pub fn from_labels(labels: Vec<PredictedLabel>, taxonomy: &Taxonomy) -> Self {
        let non = taxonomy.lookup(crate::taxonomy::names::NON_PARAPHRASE).ok().map(|t| t.id);
        let is_paraphrase = !labels
            .iter()
            .any(|l| matches!(l.label, Label::Type(t) if Some(t) == non));
        Prediction { is_paraphrase, labels }
    }
}

/// Credit earned by one gold type within one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCredit {
    pub type_id: TypeId,
    /// Gold units of this type in the pair.
    pub gold: u32,
    pub type_matched: u32,
    pub group_matched: u32,
    /// Share of this type in the pair's score; the shares of a pair sum to 1.
    pub weight: f64,
}

impl TypeCredit {
    pub fn type_acc(&self) -> f64 {
        self.type_matched as f64 / self.gold as f64
    }

    pub fn group_acc(&self) -> f64 {
        self.group_matched as f64 / self.gold as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub pair_id: String,
    /// 1 when the binary decision is right, else 0.
    pub binary: u8,
    pub gold_binary: bool,
    pub pred_binary: bool,
    /// `None` for pairs without gold annotations.
    pub type_acc: Option<f64>,
    pub group_acc: Option<f64>,
    pub credits: Vec<TypeCredit>,
}

fn check_labels(pred: &Prediction, taxonomy: &Taxonomy) -> Result<(), ScoringError> {
    for l in &pred.labels {
        match l.label {
            Label::Type(t) if !taxonomy.contains(t) => return Err(ScoringError::UnknownType(t.0)),
            Label::Group(g) if g.0 >= taxonomy.groups().len() => {
                return Err(ScoringError::UnknownGroup(g.0.to_string()))
            }
            _ => {}
        }
    }
    Ok(())
}

// A gold unit and the predictions eligible to match it, by a key that is
// either the bare type (location-free) or the type plus the unit's spans.
type SpanKey = Vec<(Span, Span)>;

struct Unit {
    type_id: TypeId,
    group: GroupId,
    key: SpanKey,
}

fn gold_units(pair: &AnnotatedPair, taxonomy: &Taxonomy, mode: MatchMode) -> Result<Vec<Unit>, ScoringError> {
    let mut by_unit: BTreeMap<(u32, TypeId), SpanKey> = BTreeMap::new();
    for a in &pair.annotations {
        by_unit
            .entry((a.segment_id, a.type_id))
            .or_default()
            .push((a.span1, a.span2));
    }
    by_unit
        .into_iter()
        .map(|((_, t), mut spans)| {
            let group = taxonomy.group_of(t).map_err(|_| ScoringError::UnknownType(t.0))?;
            spans.sort();
            let key = if mode == MatchMode::StrictSpan { spans } else { Vec::new() };
            Ok(Unit { type_id: t, group, key })
        })
        .collect()
}

struct PredUnit {
    label: Label,
    key: Option<SpanKey>,
}

fn pred_units(pred: &Prediction, mode: MatchMode) -> Vec<PredUnit> {
    let mut keyed: BTreeMap<(u32, Label), Option<SpanKey>> = BTreeMap::new();
    let mut out = Vec::new();
    for l in &pred.labels {
        let span = match (l.span1, l.span2) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        match l.segment_id {
            Some(seg) => {
                let slot = keyed.entry((seg, l.label)).or_insert_with(|| Some(Vec::new()));
                match (slot.as_mut(), span) {
                    (Some(v), Some(s)) => v.push(s),
                    _ => *slot = None,
                }
            }
            None => out.push(PredUnit {
                label: l.label,
                key: span.map(|s| vec![s]),
            }),
        }
    }
    for ((_, label), key) in keyed {
        out.push(PredUnit {
            label,
            key: key.map(|mut k| {
                k.sort();
                k
            }),
        });
    }
    if mode == MatchMode::LocationFree {
        for p in &mut out {
            p.key = Some(Vec::new());
        }
    }
    out
}

/// Scores one pair.
///
/// Type credit: every prediction consumes at most one gold unit of the same
/// type. Group credit starts from the type credit; leftover predictions then
/// consume leftover gold units of the same scoring family, lowest type id first.
/// Types of non-scoring families (Extremes by default) only get exact-type
/// credit. Consequently `group_acc >= type_acc` on every pair.
pub fn score_detection(
    gold: &AnnotatedPair,
    pred: &Prediction,
    taxonomy: &Taxonomy,
    options: DetectionOptions,
) -> Result<DetectionScore, ScoringError> {
    check_labels(pred, taxonomy)?;
    let units = gold_units(gold, taxonomy, options.mode)?;
    let preds = pred_units(pred, options.mode);

    let binary = u8::from(pred.is_paraphrase == gold.is_paraphrase);
    let mut score = DetectionScore {
        pair_id: gold.id.clone(),
        binary,
        gold_binary: gold.is_paraphrase,
        pred_binary: pred.is_paraphrase,
        type_acc: None,
        group_acc: None,
        credits: Vec::new(),
    };
    if units.is_empty() {
        return Ok(score);
    }

    // Phase 1: exact type.
    let mut unit_taken = vec![false; units.len()];
    let mut pred_used = vec![false; preds.len()];
    let mut type_hits: BTreeMap<TypeId, u32> = BTreeMap::new();
    for (u, unit) in units.iter().enumerate() {
        if let Some(p) = preds.iter().enumerate().position(|(k, p)| {
            !pred_used[k] && p.label == Label::Type(unit.type_id) && p.key.as_ref() == Some(&unit.key)
        }) {
            pred_used[p] = true;
            unit_taken[u] = true;
            *type_hits.entry(unit.type_id).or_insert(0) += 1;
        }
    }

    // Phase 2: same family, leftover units in ascending type id.
    let mut group_hits = type_hits.clone();
    let mut order: Vec<usize> = (0..units.len()).filter(|&u| !unit_taken[u]).collect();
    order.sort_by_key(|&u| units[u].type_id);
    for u in order {
        let unit = &units[u];
        if !taxonomy.is_scoring_group(unit.group) {
            continue;
        }
        let same_group = |label: Label| match label {
            Label::Type(t) => taxonomy.group_of(t).ok() == Some(unit.group),
            Label::Group(g) => g == unit.group,
        };
        if let Some(p) = preds.iter().enumerate().position(|(k, p)| {
            !pred_used[k] && same_group(p.label) && p.key.as_ref() == Some(&unit.key)
        }) {
            pred_used[p] = true;
            *group_hits.entry(unit.type_id).or_insert(0) += 1;
        }
    }

    let mut gold_counts: BTreeMap<TypeId, u32> = BTreeMap::new();
    for unit in &units {
        *gold_counts.entry(unit.type_id).or_insert(0) += 1;
    }
    let distinct = gold_counts.len() as f64;
    let total = units.len() as f64;
    for (&t, &g) in &gold_counts {
        let weight = match options.weighting {
            Weighting::Uniform => 1.0 / distinct,
            Weighting::Proportional => g as f64 / total,
        };
        score.credits.push(TypeCredit {
            type_id: t,
            gold: g,
            type_matched: type_hits.get(&t).copied().unwrap_or(0),
            group_matched: group_hits.get(&t).copied().unwrap_or(0),
            weight,
        });
    }
    score.type_acc = Some(score.credits.iter().map(|c| c.weight * c.type_acc()).sum());
    score.group_acc = Some(score.credits.iter().map(|c| c.weight * c.group_acc()).sum());
    Ok(score)
}

/// Distinct gold types of a pair, for callers that need the vote structure.
pub fn gold_types(pair: &AnnotatedPair) -> BTreeSet<TypeId> {
    pair.annotations.iter().map(|a| a.type_id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SegmentAnnotation;
    use crate::taxonomy::names;

    fn tax() -> Taxonomy {
        Taxonomy::default()
    }

    fn ann(seg: u32, t: TypeId, a: usize) -> SegmentAnnotation {
        SegmentAnnotation::new(seg, t, Span::new(a, a + 1), Span::new(a, a + 1))
    }

    // gold {(s1,lex),(s2,syn),(s3,dis),(s4,lex)}
    fn example() -> (AnnotatedPair, TypeId, TypeId, TypeId) {
        let t = tax();
        let lex = t.id_of(names::SAME_POLARITY_CONTEXTUAL);
        let syn = t.id_of(names::NEGATION_SWITCHING);
        let dis = t.id_of(names::PUNCTUATION);
        let pair = AnnotatedPair::new(
            "ex",
            "a b c d e",
            "a b c d e",
            true,
            vec![ann(1, lex, 0), ann(2, syn, 1), ann(3, dis, 2), ann(4, lex, 3)],
        );
        (pair, lex, syn, dis)
    }

    #[test]
    fn perfect_prediction() {
        let (pair, ..) = example();
        let s = score_detection(&pair, &Prediction::from_gold(&pair), &tax(), Default::default()).unwrap();
        assert_eq!(s.type_acc, Some(1.0));
        assert_eq!(s.group_acc, Some(1.0));
        assert_eq!(s.binary, 1);
    }

    #[test]
    fn wrong_on_one_type_gives_two_thirds() {
        let (pair, lex, _, dis) = example();
        let t = tax();
        let wrong = t.id_of(names::INFLECTIONAL);
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![
                PredictedLabel::of_type(lex),
                PredictedLabel::of_type(lex),
                PredictedLabel::of_type(wrong),
                PredictedLabel::of_type(dis),
            ],
        };
        let s = score_detection(&pair, &pred, &t, Default::default()).unwrap();
        assert_eq!(s.type_acc, Some(2.0 / 3.0));
        assert!(s.group_acc.unwrap() >= s.type_acc.unwrap());
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let (pair, ..) = example();
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![],
        };
        let s = score_detection(&pair, &pred, &tax(), Default::default()).unwrap();
        assert_eq!((s.type_acc, s.group_acc), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn group_label_earns_group_credit_only() {
        let (pair, lex, ..) = example();
        let t = tax();
        let g = t.group_of(lex).unwrap();
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![PredictedLabel::of_group(g), PredictedLabel::of_group(g)],
        };
        let s = score_detection(&pair, &pred, &t, Default::default()).unwrap();
        assert_eq!(s.type_acc, Some(0.0));
        assert_eq!(s.group_acc, Some(1.0 / 3.0));
    }

    #[test]
    fn proportional_weighting() {
        let (pair, lex, ..) = example();
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![PredictedLabel::of_type(lex), PredictedLabel::of_type(lex)],
        };
        let opts = DetectionOptions {
            weighting: Weighting::Proportional,
            ..Default::default()
        };
        let s = score_detection(&pair, &pred, &tax(), opts).unwrap();
        assert_eq!(s.type_acc, Some(0.5));
    }

    #[test]
    fn strict_span_needs_positions() {
        let (pair, lex, syn, dis) = example();
        let t = tax();
        let opts = DetectionOptions {
            mode: MatchMode::StrictSpan,
            ..Default::default()
        };
        let s = score_detection(&pair, &Prediction::from_gold(&pair), &t, opts).unwrap();
        assert_eq!(s.type_acc, Some(1.0));

        let shifted = Prediction {
            is_paraphrase: true,
            labels: vec![
                (&ann(1, lex, 1)).into(),
                (&ann(2, syn, 1)).into(),
                (&ann(3, dis, 2)).into(),
                PredictedLabel::of_type(lex),
            ],
        };
        let s = score_detection(&pair, &shifted, &t, opts).unwrap();
        // lex misplaced twice, syn and dis right
        assert_eq!(s.type_acc, Some(2.0 / 3.0));
        let loose = score_detection(&pair, &shifted, &t, Default::default()).unwrap();
        assert_eq!(loose.type_acc, Some(1.0));
    }

    #[test]
    fn extremes_get_exact_credit_only() {
        let t = tax();
        let identity = t.id_of(names::IDENTITY);
        let entail = t.id_of("Entailment");
        let pair = AnnotatedPair::new("p", "a b", "a b", true, vec![ann(1, identity, 0)]);
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![PredictedLabel::of_type(entail)],
        };
        let s = score_detection(&pair, &pred, &t, Default::default()).unwrap();
        assert_eq!((s.type_acc, s.group_acc), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn relabeling_and_order_do_not_matter() {
        let (pair, lex, syn, _) = example();
        let t = tax();
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![PredictedLabel::of_type(syn), PredictedLabel::of_type(lex)],
        };
        let base = score_detection(&pair, &pred, &t, Default::default()).unwrap();
        let mut shuffled = pair.clone();
        shuffled.annotations.reverse();
        for a in &mut shuffled.annotations {
            a.segment_id = 5 - a.segment_id;
        }
        let again = score_detection(&shuffled, &pred, &t, Default::default()).unwrap();
        assert_eq!(base.type_acc, again.type_acc);
        assert_eq!(base.group_acc, again.group_acc);
    }

    #[test]
    fn repeated_spans_of_one_unit_count_once() {
        let t = tax();
        let lex = t.id_of(names::SAME_POLARITY_CONTEXTUAL);
        let pair = AnnotatedPair::new("p", "a b c", "a b c", true, vec![ann(1, lex, 0), ann(1, lex, 2)]);
        let s = score_detection(&pair, &Prediction::from_gold(&pair), &t, Default::default()).unwrap();
        assert_eq!(s.credits[0].gold, 1);
        assert_eq!(s.type_acc, Some(1.0));
    }

    #[test]
    fn binary_and_untyped() {
        let t = tax();
        let pair = AnnotatedPair::new("q", "a", "b", false, vec![]);
        let pred = Prediction::from_labels(vec![], &t);
        assert!(pred.is_paraphrase);
        let s = score_detection(&pair, &pred, &t, Default::default()).unwrap();
        assert_eq!(s.binary, 0);
        assert_eq!(s.type_acc, None);
        let non = Prediction::from_labels(vec![PredictedLabel::of_type(t.id_of(names::NON_PARAPHRASE))], &t);
        assert!(!non.is_paraphrase);
    }

    #[test]
    fn unknown_type_is_rejected() {
        let (pair, ..) = example();
        let pred = Prediction {
            is_paraphrase: true,
            labels: vec![PredictedLabel::of_type(TypeId(20))],
        };
        assert!(matches!(
            score_detection(&pair, &pred, &tax(), Default::default()),
            Err(ScoringError::UnknownType(20))
        ));
    }
}
