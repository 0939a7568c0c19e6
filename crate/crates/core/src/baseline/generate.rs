use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BaselineError, LexiconSet};
use crate::align::{detokenize, is_punct_token, TokenizerPolicy};
use crate::corpus::{LabelSeq, SegmentAnnotation};
use crate::span::Span;
use crate::taxonomy::{names, Taxonomy, TypeId};

/// A request to apply one paraphrase type to a span of the source sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedRequest {
    pub span: Span,
    pub type_id: TypeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRequest {
    pub request: TypedRequest,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Generated {
    pub tokens: Vec<String>,
    pub text: String,
    /// Labels over the generated tokens.
    pub labels: LabelSeq,
    /// Labels over the source tokens.
    pub source_labels: LabelSeq,
    /// One annotation per applied request, in source order.
    pub annotations: Vec<SegmentAnnotation>,
    pub skipped: Vec<SkippedRequest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Contraction,
    Synonym,
    Deletion,
    Swap,
    Punctuation,
    Negation,
    Modal,
}

const RULES: [(&str, Rule); 7] = [
    (names::SPELLING, Rule::Contraction),
    (names::SAME_POLARITY_CONTEXTUAL, Rule::Synonym),
    (names::ADDITION_DELETION, Rule::Deletion),
    (names::CHANGE_OF_ORDER, Rule::Swap),
    (names::PUNCTUATION, Rule::Punctuation),
    (names::NEGATION_SWITCHING, Rule::Negation),
    (names::MODAL_VERB, Rule::Modal),
];

/// Type ids the generator can produce under `taxonomy`.
pub fn supported_types(taxonomy: &Taxonomy) -> Vec<TypeId> {
    RULES
        .iter()
        .filter_map(|(name, _)| taxonomy.lookup(*name).ok().map(|t| t.id))
        .collect()
}

fn rule_for(type_id: TypeId, taxonomy: &Taxonomy) -> Option<Rule> {
    let name = taxonomy.name_of(type_id)?;
    RULES.iter().find(|(n, _)| *n == name).map(|(_, r)| *r)
}

const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "with", "for", "from", "during", "after", "before", "near", "under", "over", "without",
    "since", "through",
];
const TEMPORAL: &[&str] = &[
    "yesterday", "today", "tomorrow", "now", "recently", "again", "soon", "later", "still", "already", "also",
    "really", "very", "just", "then",
];
const PUNCT_SWAPS: &[(&str, &str)] = &[(",", ";"), (";", ","), (".", "!"), ("!", "."), (":", ";")];

/// Whether `tokens` can be dropped without breaking the sentence: a single
/// `-ly` adverb or temporal word, or a prepositional phrase.
pub fn is_optional_adjunct(tokens: &[String]) -> bool {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    match lower.as_slice() {
        [] => false,
        [w] => TEMPORAL.contains(&w.as_str()) || (w.len() > 4 && w.ends_with("ly")),
        [head, rest @ ..] => PREPOSITIONS.contains(&head.as_str()) && rest.iter().all(|t| !is_punct_token(t)),
    }
}

fn match_case(source: &str, mut replacement: Vec<String>) -> Vec<String> {
    if source.chars().next().is_some_and(char::is_uppercase) {
        if let Some(first) = replacement.first_mut() {
            let mut c = first.chars();
            if let Some(h) = c.next() {
                *first = h.to_uppercase().chain(c).collect();
            }
        }
    }
    replacement
}

fn pick<'a>(rng: &mut ChaCha8Rng, options: &[&'a String]) -> Option<&'a String> {
    options.choose(rng).copied()
}

struct Applied {
    region: Span,
    replacement: Vec<String>,
}

fn apply_rule(
    rule: Rule,
    source: &[String],
    span: Span,
    lex: &LexiconSet,
    rng: &mut ChaCha8Rng,
) -> Result<Applied, &'static str> {
    let toks = &source[span.range()];
    let single = (toks.len() == 1).then(|| &toks[0]);
    let replace = |replacement: Vec<String>| Applied {
        region: span,
        replacement: match_case(&toks[0], replacement),
    };
    match rule {
        Rule::Contraction => lex
            .contraction_of(toks)
            .map(|other| replace(other.to_vec()))
            .ok_or("no contraction entry"),
        Rule::Synonym => {
            let w = single.ok_or("synonym substitution needs a single token")?;
            let options: Vec<&String> = lex.synonyms(w).map(|s| s.iter().collect()).unwrap_or_default();
            pick(rng, &options).map(|s| replace(vec![s.clone()])).ok_or("no synonym")
        }
        Rule::Deletion => {
            if is_optional_adjunct(toks) {
                Ok(Applied {
                    region: span,
                    replacement: Vec::new(),
                })
            } else {
                Err("span is not an optional adjunct")
            }
        }
        Rule::Swap => {
            let next = source.get(span.end).ok_or("no constituent to the right")?;
            if is_punct_token(next) || toks.iter().all(|t| t == next) {
                return Err("no constituent to the right");
            }
            let mut out = vec![next.clone()];
            out.extend(toks.iter().cloned());
            Ok(Applied {
                region: Span::new(span.start, span.end + 1),
                replacement: out,
            })
        }
        Rule::Punctuation => {
            let p = single.ok_or("punctuation change needs a single token")?;
            PUNCT_SWAPS
                .iter()
                .find(|(a, _)| a == p)
                .map(|(_, b)| replace(vec![b.to_string()]))
                .ok_or("not a swappable punctuation mark")
        }
        Rule::Negation => {
            let antonyms = |w: &String| -> Vec<&String> { lex.antonyms(w).map(|s| s.iter().collect()).unwrap_or_default() };
            match toks {
                [w] => {
                    let a = pick(rng, &antonyms(w)).ok_or("no antonym")?;
                    Ok(replace(vec!["not".to_string(), a.clone()]))
                }
                [n, w] if lex.is_negator(n) => {
                    let a = pick(rng, &antonyms(w)).ok_or("no antonym")?;
                    Ok(replace(vec![a.clone()]))
                }
                _ => Err("negation needs a word or a negated word"),
            }
        }
        Rule::Modal => {
            let m = single.ok_or("modal change needs a single token")?;
            pick(rng, &lex.modal_alternatives(m))
                .map(|a| replace(vec![a.clone()]))
                .ok_or("not an interchangeable modal")
        }
    }
}

/// Applies typed perturbations to `source`.
///
/// Requests are validated first (non-empty in-range spans, supported types,
/// no overlaps), then applied left to right; the seed drives every choice
/// among several lexicon candidates. A request whose rule finds nothing to do
/// leaves its span untouched and is reported in `skipped`.
pub fn generate_typed(
    source: &[String],
    requests: &[TypedRequest],
    lexicons: &LexiconSet,
    taxonomy: &Taxonomy,
    seed: u64,
) -> Result<Generated, BaselineError> {
    let mut ordered: Vec<(TypedRequest, Rule)> = Vec::with_capacity(requests.len());
    for r in requests {
        if r.span.is_empty() || !r.span.is_well_formed() || r.span.end > source.len() {
            return Err(BaselineError::InvalidSpan {
                span: r.span,
                len: source.len(),
            });
        }
        let rule = rule_for(r.type_id, taxonomy).ok_or(BaselineError::UnsupportedType(r.type_id.0))?;
        ordered.push((*r, rule));
    }
    ordered.sort_by_key(|(r, _)| r.span.start);

    // a swap also rewrites the token right after its span
    let reach = |r: &TypedRequest, rule: Rule| match rule {
        Rule::Swap => r.span.end + 1,
        _ => r.span.end,
    };
    for w in ordered.windows(2) {
        if w[1].0.span.start < reach(&w[0].0, w[0].1) {
            return Err(BaselineError::OverlappingRequests(w[0].0.span, w[1].0.span));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applied: Vec<(TypedRequest, Applied)> = Vec::new();
    let mut skipped = Vec::new();
    for (req, rule) in &ordered {
        match apply_rule(*rule, source, req.span, lexicons, &mut rng) {
            Ok(a) => applied.push((*req, a)),
            Err(reason) => skipped.push(SkippedRequest {
                request: *req,
                reason: reason.to_string(),
            }),
        }
    }

    let mut tokens = Vec::with_capacity(source.len());
    let mut source_labels = LabelSeq::zeros(source.len());
    let mut target_types = Vec::new();
    let mut annotations = Vec::new();
    let mut cursor = 0;
    for (seg, (req, a)) in applied.into_iter().enumerate() {
        tokens.extend_from_slice(&source[cursor..a.region.start]);
        let start = tokens.len();
        tokens.extend(a.replacement);
        let target = Span::new(start, tokens.len());
        target_types.push((target, req.type_id));
        for slot in &mut source_labels.labels[a.region.range()] {
            *slot = req.type_id;
        }
        annotations.push(SegmentAnnotation::new(seg as u32 + 1, req.type_id, a.region, target));
        cursor = a.region.end;
    }
    tokens.extend_from_slice(&source[cursor..]);
    let mut labels = LabelSeq::zeros(tokens.len());
    for (span, t) in target_types {
        for slot in &mut labels.labels[span.range()] {
            *slot = t;
        }
    }
    Ok(Generated {
        text: detokenize(&tokens, &TokenizerPolicy::ALIGNMENT),
        tokens,
        labels,
        source_labels,
        annotations,
        skipped,
    })
}
