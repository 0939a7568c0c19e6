//! Seeded synthetic data: typed corpora shaped like ETPC, and source
//! sentences with a slot for each type the baseline generator supports.
//!
//! Everything here is deterministic for a given seed.

use std::sync::Arc;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::baseline::LexiconSet;
use crate::corpus::{reference_counts, AnnotatedPair, Corpus, SegmentAnnotation, TypedText};
use crate::span::Span;
use crate::taxonomy::{names, Taxonomy, TypeId};

const WORDS: &[&str] = &[
    "teacher", "garden", "window", "river", "letter", "doctor", "market", "village", "student", "table",
    "morning", "picture", "bridge", "company", "report", "council", "museum", "engine", "harbor", "farmer",
    "printer", "ladder", "basket", "pencil", "island", "forest", "blanket", "kitchen", "station", "mountain",
    "visited", "painted", "carried", "watched", "repaired", "described", "followed", "counted", "measured",
    "ordered", "the", "a", "of", "and", "to", "was", "his", "their", "new", "old", "green", "heavy", "narrow",
];
const SUBJECTS: &[&str] = &["The teacher", "A doctor", "The farmer", "Our council", "The student", "My neighbour"];
const VERBS: &[&str] = &["visited", "painted", "carried", "watched", "repaired", "described", "followed"];
const NOUNS: &[&str] = &["garden", "window", "river", "letter", "market", "village", "table", "picture", "bridge"];
const ADJECTIVES: &[&str] = &["green", "heavy", "narrow", "wooden", "distant", "yellow"];
const ADJUNCTS: &[&str] = &["today", "yesterday", "recently", "slowly", "in the morning", "near the station", "with care"];

fn word(rng: &mut ChaCha8Rng, list: &[&str]) -> String {
    list.choose(rng).expect("non-empty list").to_string()
}

fn words(text: &str) -> Vec<String> {
    crate::align::tokenize(text, &crate::align::TokenizerPolicy::ALIGNMENT)
}

/// Knobs for [`synthetic_corpus`].
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Inclusive range of sentence lengths in tokens.
    pub min_len: usize,
    pub max_len: usize,
    /// Maximum number of segments per pair.
    pub max_segments: usize,
    /// Probability that a segment carries a second type.
    pub multi_type: f64,
    /// Fraction of pairs labelled as non-paraphrases.
    pub negatives: f64,
}

impl SynthConfig {
    pub fn new(pairs: usize, seed: u64) -> Self {
        SynthConfig {
            pairs,
            seed,
            min_len: 8,
            max_len: 20,
            max_segments: 4,
            multi_type: 0.1,
            negatives: 0.3,
        }
    }
}

/// A typed corpus whose type frequencies follow the published ETPC counts.
///
/// Each pair starts from random words; every segment is a short span that is
/// rewritten in the second sentence (some tokens replaced, sometimes one
/// dropped or the order reversed), so segment-level metrics vary from pair to
/// pair.
pub fn synthetic_corpus(config: SynthConfig, taxonomy: Arc<Taxonomy>) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool: Vec<(TypeId, u64)> = reference_counts()
        .iter()
        .filter_map(|(name, n)| taxonomy.lookup(*name).ok().map(|t| (t.id, *n)))
        .collect();
    let weights = WeightedIndex::new(pool.iter().map(|p| p.1)).expect("positive weights");

    let mut pairs = Vec::with_capacity(config.pairs);
    for k in 0..config.pairs {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let s1: Vec<String> = (0..len).map(|_| word(&mut rng, WORDS)).collect();
        let segments = rng.gen_range(1..=config.max_segments.min(len / 3).max(1));

        // disjoint spans: cut the sentence into `segments` windows, one span in each
        let window = len / segments;
        let mut spans = Vec::new();
        for w in 0..segments {
            let span_len = rng.gen_range(1..=3.min(window));
            let start = w * window + rng.gen_range(0..=window - span_len);
            spans.push(Span::new(start, start + span_len));
        }

        let mut s2 = Vec::with_capacity(len + 4);
        let mut annotations = Vec::new();
        let mut cursor = 0;
        for (seg, span) in spans.iter().enumerate() {
            s2.extend_from_slice(&s1[cursor..span.start]);
            let mut piece: Vec<String> = s1[span.range()].to_vec();
            for tok in piece.iter_mut() {
                if rng.gen_bool(0.5) {
                    *tok = word(&mut rng, WORDS);
                }
            }
            if piece.len() > 1 && rng.gen_bool(0.3) {
                piece.reverse();
            }
            if piece.len() > 1 && rng.gen_bool(0.2) {
                piece.pop();
            }
            let start2 = s2.len();
            s2.extend(piece);
            let span2 = Span::new(start2, s2.len());
            cursor = span.end;

            let first = pool[weights.sample(&mut rng)].0;
            let mut types = vec![first];
            if rng.gen_bool(config.multi_type) {
                let second = pool[weights.sample(&mut rng)].0;
                if second != first {
                    types.push(second);
                }
            }
            for t in types {
                annotations.push(SegmentAnnotation::new(seg as u32 + 1, t, *span, span2));
            }
        }
        s2.extend_from_slice(&s1[cursor..]);

        let raw = |t: &[String]| t.join(" ");
        pairs.push(AnnotatedPair {
            id: format!("synth-{k:05}"),
            s1: TypedText::with_tokens(raw(&s1), s1),
            s2: TypedText::with_tokens(raw(&s2), s2),
            is_paraphrase: !rng.gen_bool(config.negatives),
            annotations,
        });
    }
    Corpus::new("synthetic", pairs, taxonomy).expect("synthetic pairs are valid")
}

/// A source sentence with a span on which the generator rule for `type_name`
/// can fire. `None` when the type is unsupported or the lexicon has no entry
/// to build the slot from.
pub fn typed_source(type_name: &str, lexicons: &LexiconSet, rng: &mut ChaCha8Rng) -> Option<(Vec<String>, Span)> {
    let subj = words(&word(rng, SUBJECTS));
    let verb = word(rng, VERBS);
    let noun = word(rng, NOUNS);
    let adjunct = words(&word(rng, ADJUNCTS));

    let mut tokens = subj.clone();
    let slot: Span;
    match type_name {
        names::SPELLING => {
            let options: Vec<&Vec<String>> = lexicons.expansions().collect();
            let phrase = (*options.choose(rng)?).clone();
            slot = Span::new(tokens.len(), tokens.len() + phrase.len());
            tokens.extend(phrase);
            tokens.extend([verb, "the".into(), noun]);
        }
        names::SAME_POLARITY_CONTEXTUAL => {
            let options: Vec<&String> = lexicons.synonym_words().collect();
            let w = (*options.choose(rng)?).clone();
            tokens.extend([verb, "the".into()]);
            slot = Span::new(tokens.len(), tokens.len() + 1);
            tokens.push(w);
            tokens.extend(adjunct);
        }
        names::ADDITION_DELETION => {
            tokens.extend([verb, "the".into(), noun]);
            slot = Span::new(tokens.len(), tokens.len() + adjunct.len());
            tokens.extend(adjunct);
        }
        names::CHANGE_OF_ORDER => {
            tokens.extend([verb, "the".into()]);
            slot = Span::new(tokens.len(), tokens.len() + 1);
            tokens.extend([word(rng, ADJECTIVES), noun]);
        }
        names::PUNCTUATION => {
            tokens.extend([verb, "the".into(), noun]);
            if rng.gen_bool(0.5) {
                slot = Span::new(tokens.len(), tokens.len() + 1);
                tokens.push(",".into());
                tokens.extend(adjunct);
            } else {
                tokens.extend(adjunct);
                slot = Span::new(tokens.len(), tokens.len() + 1);
            }
        }
        names::NEGATION_SWITCHING => {
            let options: Vec<&String> = lexicons.antonym_words().collect();
            let w = (*options.choose(rng)?).clone();
            tokens.push("was".into());
            if rng.gen_bool(0.5) {
                slot = Span::new(tokens.len(), tokens.len() + 2);
                tokens.extend(["not".into(), w]);
            } else {
                slot = Span::new(tokens.len(), tokens.len() + 1);
                tokens.push(w);
            }
            tokens.extend(adjunct);
        }
        names::MODAL_VERB => {
            let classes: Vec<&String> = lexicons
                .modal_classes()
                .iter()
                .filter(|c| c.len() > 1)
                .flat_map(|c| c.iter())
                .collect();
            let m = (*classes.choose(rng)?).clone();
            slot = Span::new(tokens.len(), tokens.len() + 1);
            tokens.extend([m, "see".into(), "the".into(), noun]);
        }
        _ => return None,
    }
    tokens.push(".".into());
    Some((tokens, slot))
}
