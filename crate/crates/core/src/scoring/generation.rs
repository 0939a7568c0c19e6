use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::ScoringError;
use crate::align::{align, lcs_len, tokenize, EditOp, TokenizerPolicy};
use crate::corpus::{AnnotatedPair, Corpus};
use crate::metrics::{corpus_bleu, ngram_overlap, MetricVector, PrecisionRecallF1};
use crate::taxonomy::{Taxonomy, TypeId};

/// One gold segment scored against its counterpart in the generated sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentScore {
    pub segment_id: u32,
    pub type_ids: Vec<TypeId>,
    /// Gold target tokens of the segment.
    pub reference: Vec<String>,
    /// Generated tokens aligned to the segment; empty when none were found.
    pub candidate: Vec<String>,
    pub metrics: MetricVector,
}

/// Micro-averaged scores over a set of segments: n-gram and LCS counts are
/// summed before the ratios are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PooledScores {
    pub bleu: f64,
    pub rouge1: PrecisionRecallF1,
    pub rouge2: PrecisionRecallF1,
    #[serde(rename = "rougeL")]
    pub rouge_l: PrecisionRecallF1,
}

impl PooledScores {
    pub fn pool<'a>(segments: impl IntoIterator<Item = &'a SegmentScore> + Clone) -> Option<Self> {
        let pairs: Vec<(Vec<&str>, Vec<&str>)> = segments
            .into_iter()
            .map(|s| {
                (
                    s.candidate.iter().map(String::as_str).collect(),
                    s.reference.iter().map(String::as_str).collect(),
                )
            })
            .collect();
        if pairs.is_empty() {
            return None;
        }
        let mut counts = [(0u64, 0u64, 0u64); 3];
        for (c, r) in &pairs {
            for n in 1..=2 {
                let (o, ct, rt) = ngram_overlap(c, r, n);
                counts[n - 1].0 += o;
                counts[n - 1].1 += ct;
                counts[n - 1].2 += rt;
            }
            counts[2].0 += lcs_len(c, r) as u64;
            counts[2].1 += c.len() as u64;
            counts[2].2 += r.len() as u64;
        }
        let prf = |(o, c, r): (u64, u64, u64)| PrecisionRecallF1::from_counts(o, c, r);
        Some(PooledScores {
            bleu: corpus_bleu(&pairs).ok()?,
            rouge1: prf(counts[0]),
            rouge2: prf(counts[1]),
            rouge_l: prf(counts[2]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationScore {
    pub pair_id: String,
    pub segments: Vec<SegmentScore>,
    /// Gold segments with no tokens in the target sentence (pure deletions).
    pub skipped_segments: usize,
    /// `None` when every gold segment was skipped.
    pub pooled: Option<PooledScores>,
}

fn normalize(tokens: &[String], policy: &TokenizerPolicy) -> Vec<String> {
    if policy.lowercase {
        tokens.iter().map(|t| t.to_lowercase()).collect()
    } else {
        tokens.to_vec()
    }
}

/// Scores a generated sentence against the gold target of `gold`, segment by
/// segment.
///
/// The generated tokens are aligned to the gold target tokens. A segment's
/// counterpart is every generated token matched or substituted for one of the
/// segment's target tokens, plus the insertions lying between them.
pub fn score_generation(
    gold: &AnnotatedPair,
    generated: &str,
    taxonomy: &Taxonomy,
    policy: &TokenizerPolicy,
) -> Result<GenerationScore, ScoringError> {
    gold.validate(taxonomy)
        .map_err(|e| ScoringError::InvalidGold(format!("{}: {e}", gold.id)))?;
    let candidate = tokenize(generated, policy);
    if candidate.is_empty() {
        return Err(ScoringError::EmptyGenerated(gold.id.clone()));
    }
    let target = normalize(&gold.s2.tokens, policy);
    let alignment = align(&target, &candidate);

    let mut segments: BTreeMap<u32, (BTreeSet<TypeId>, BTreeSet<usize>)> = BTreeMap::new();
    for a in &gold.annotations {
        let entry = segments.entry(a.segment_id).or_default();
        entry.0.insert(a.type_id);
        entry.1.extend(a.span2.range());
    }

    let mut out = GenerationScore {
        pair_id: gold.id.clone(),
        segments: Vec::new(),
        skipped_segments: 0,
        pooled: None,
    };
    for (segment_id, (types, positions)) in segments {
        if positions.is_empty() {
            out.skipped_segments += 1;
            continue;
        }
        let reference: Vec<String> = positions.iter().map(|&i| target[i].clone()).collect();
        let ops = &alignment.ops;
        let hit = |op: &EditOp| op.left().is_some_and(|l| positions.contains(&l)) && op.right().is_some();
        let first = ops.iter().position(hit);
        let last = ops.iter().rposition(hit);
        let cand: Vec<String> = match (first, last) {
            (Some(f), Some(l)) => ops[f..=l]
                .iter()
                .filter(|op| matches!(op, EditOp::Insert(_)) || hit(op))
                .filter_map(EditOp::right)
                .map(|j| candidate[j].clone())
                .collect(),
            _ => Vec::new(),
        };
        let metrics = if cand.is_empty() {
            MetricVector::zero()
        } else {
            MetricVector::compute(&cand, &reference)
        };
        out.segments.push(SegmentScore {
            segment_id,
            type_ids: types.into_iter().collect(),
            reference,
            candidate: cand,
            metrics,
        });
    }
    out.pooled = PooledScores::pool(&out.segments);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationReport {
    pub pairs: usize,
    pub segments: usize,
    pub skipped_segments: usize,
    pub pooled: Option<PooledScores>,
    /// Per-type pooled scores over segments carrying that type.
    pub per_type: BTreeMap<String, PooledScores>,
}

/// Scores every corpus pair with its generated sentence (by pair id) and pools
/// all segments. Pairs without annotations are ignored.
pub fn aggregate_generation(
    corpus: &Corpus,
    generated: &HashMap<String, String>,
    policy: &TokenizerPolicy,
) -> Result<(Vec<GenerationScore>, GenerationReport), ScoringError> {
    let scores = corpus
        .pairs
        .iter()
        .filter(|p| p.is_typed())
        .map(|p| {
            let g = generated
                .get(&p.id)
                .ok_or_else(|| ScoringError::MissingPrediction(p.id.clone()))?;
            score_generation(p, g, &corpus.taxonomy, policy)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let all: Vec<&SegmentScore> = scores.iter().flat_map(|s| &s.segments).collect();
    let mut per_type = BTreeMap::new();
    for t in corpus.taxonomy.types() {
        let of_type: Vec<&SegmentScore> = all.iter().copied().filter(|s| s.type_ids.contains(&t.id)).collect();
        if let Some(p) = PooledScores::pool(of_type.iter().copied()) {
            per_type.insert(t.name.clone(), p);
        }
    }
    let report = GenerationReport {
        pairs: scores.len(),
        segments: all.len(),
        skipped_segments: scores.iter().map(|s| s.skipped_segments).sum(),
        pooled: PooledScores::pool(all.iter().copied()),
        per_type,
    };
    Ok((scores, report))
}
