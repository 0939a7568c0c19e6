//! Tokenization and LCS-based token alignment of sentence pairs.
//!
//! Alignment uses a longest common subsequence as its backbone; tokens left over
//! between two consecutive matches are paired as substitutions, and the rest
//! become deletions or insertions. Changed regions are then grouped into
//! [`SegmentPairCandidate`]s, including reorder candidates for moved material.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::span::Span;

/// Default positional deviation above which a matched token counts as moved.
pub const DEFAULT_REORDER_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerPolicy {
    pub lowercase: bool,
    /// Every punctuation character becomes its own token.
    pub split_punctuation: bool,
}

impl TokenizerPolicy {
    /// Policy for alignment and corpus token spans.
    pub const ALIGNMENT: TokenizerPolicy = TokenizerPolicy {
        lowercase: false,
        split_punctuation: true,
    };

    /// Policy for n-gram matching in metrics.
    pub const METRIC: TokenizerPolicy = TokenizerPolicy {
        lowercase: true,
        split_punctuation: true,
    };
}

impl Default for TokenizerPolicy {
    fn default() -> Self {
        TokenizerPolicy::ALIGNMENT
    }
}

/// Characters that are neither alphanumeric nor whitespace.
pub fn is_punct_char(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

pub fn is_punct_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(is_punct_char)
}

/// Splits `text` into tokens. The text is NFC-normalized first.
pub fn tokenize(text: &str, policy: &TokenizerPolicy) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    let normalized = if policy.lowercase {
        normalized.to_lowercase()
    } else {
        normalized
    };

    let mut tokens = Vec::new();
    for chunk in normalized.split_whitespace() {
        if !policy.split_punctuation {
            tokens.push(chunk.to_string());
            continue;
        }
        let mut word = String::new();
        for c in chunk.chars() {
            if is_punct_char(c) {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            } else {
                word.push(c);
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

const CLOSING: &[&str] = &[".", ",", ";", ":", "!", "?", ")", "]", "}", "%"];
const OPENING: &[&str] = &["(", "[", "{", "$"];
const CONTRACTION_TAILS: &[&str] = &["t", "s", "re", "ve", "ll", "d", "m"];

/// Joins tokens into text such that `tokenize(detokenize(t)) == t` for any
/// output `t` of [`tokenize`] under the same policy.
pub fn detokenize(tokens: &[String], policy: &TokenizerPolicy) -> String {
    if !policy.split_punctuation {
        return tokens.join(" ");
    }
    let mut out = String::new();
    for (k, tok) in tokens.iter().enumerate() {
        if k > 0 {
            let prev = tokens[k - 1].as_str();
            let glue_contraction = |apos: &str, tail: Option<&String>| {
                apos == "'"
                    && tail.is_some_and(|t| CONTRACTION_TAILS.contains(&t.to_lowercase().as_str()))
            };
            let no_space = CLOSING.contains(&tok.as_str())
                || OPENING.contains(&prev)
                || (glue_contraction(tok, tokens.get(k + 1)) && !is_punct_token(prev))
                || (k >= 2
                    && glue_contraction(prev, Some(tok))
                    && !is_punct_token(&tokens[k - 2]));
            if !no_space {
                out.push(' ');
            }
        }
        out.push_str(tok);
    }
    out
}

/// One alignment operation over token indices of the two sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EditOp {
    Match(usize, usize),
    Subst(usize, usize),
    Delete(usize),
    Insert(usize),
}

impl EditOp {
    pub fn left(&self) -> Option<usize> {
        match *self {
            EditOp::Match(i, _) | EditOp::Subst(i, _) | EditOp::Delete(i) => Some(i),
            EditOp::Insert(_) => None,
        }
    }

    pub fn right(&self) -> Option<usize> {
        match *self {
            EditOp::Match(_, j) | EditOp::Subst(_, j) | EditOp::Insert(j) => Some(j),
            EditOp::Delete(_) => None,
        }
    }

    pub fn is_match(&self) -> bool {
        matches!(self, EditOp::Match(..))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
}

impl Alignment {
    pub fn matches(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ops.iter().filter_map(|op| match *op {
            EditOp::Match(i, j) => Some((i, j)),
            _ => None,
        })
    }

    pub fn match_count(&self) -> usize {
        self.matches().count()
    }
}

/// Suffix LCS table: `table[i][j]` is the LCS length of `a[i..]` and `b[j..]`.
fn lcs_table<T, F: Fn(&T, &T) -> bool>(a: &[T], b: &[T], eq: &F) -> Vec<Vec<u32>> {
    let mut table = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in (0..a.len()).rev() {
        for j in (0..b.len()).rev() {
            table[i][j] = if eq(&a[i], &b[j]) {
                table[i + 1][j + 1] + 1
            } else {
                table[i + 1][j].max(table[i][j + 1])
            };
        }
    }
    table
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // Two-row variant; metrics call this in hot loops.
    let mut prev = vec![0u32; b.len() + 1];
    let mut cur = vec![0u32; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as usize
}

/// LCS alignment with exact token equality.
pub fn align<S: AsRef<str>>(tokens1: &[S], tokens2: &[S]) -> Alignment {
    align_by(tokens1, tokens2, |a, b| a.as_ref() == b.as_ref())
}

/// LCS alignment comparing tokens case-insensitively.
pub fn align_folded<S: AsRef<str>>(tokens1: &[S], tokens2: &[S]) -> Alignment {
    align_by(tokens1, tokens2, |a, b| {
        a.as_ref().to_lowercase() == b.as_ref().to_lowercase()
    })
}

pub fn align_by<T, F: Fn(&T, &T) -> bool>(a: &[T], b: &[T], eq: F) -> Alignment {
    let table = lcs_table(a, b, &eq);
    let mut matches = Vec::with_capacity(table[0][0] as usize);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if eq(&a[i], &b[j]) && table[i][j] == table[i + 1][j + 1] + 1 {
            matches.push((i, j));
            i += 1;
            j += 1;
        } else if table[i + 1][j] >= table[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let mut ops = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    let fill_gap = |ops: &mut Vec<EditOp>, i0: usize, i1: usize, j0: usize, j1: usize| {
        let paired = (i1 - i0).min(j1 - j0);
        for k in 0..paired {
            ops.push(EditOp::Subst(i0 + k, j0 + k));
        }
        for k in i0 + paired..i1 {
            ops.push(EditOp::Delete(k));
        }
        for k in j0 + paired..j1 {
            ops.push(EditOp::Insert(k));
        }
    };
    for &(mi, mj) in &matches {
        fill_gap(&mut ops, i, mi, j, mj);
        ops.push(EditOp::Match(mi, mj));
        i = mi + 1;
        j = mj + 1;
    }
    fill_gap(&mut ops, i, a.len(), j, b.len());
    Alignment { ops }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Substitution,
    Insertion,
    Deletion,
    Reorder,
}

/// A changed region between the two sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPairCandidate {
    pub span1: Span,
    pub span2: Span,
    pub kind: CandidateKind,
}

fn norm_pos(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

fn folded(tokens: &[String], span: Span) -> Vec<String> {
    tokens[span.range()].iter().map(|t| t.to_lowercase()).collect()
}

/// [`extract_segments_with`] at the default reorder threshold.
pub fn extract_segments(
    alignment: &Alignment,
    tokens1: &[String],
    tokens2: &[String],
) -> Vec<SegmentPairCandidate> {
    extract_segments_with(alignment, tokens1, tokens2, DEFAULT_REORDER_THRESHOLD)
}

/// Groups the alignment's changed regions into candidates.
///
/// Maximal runs of non-match operations become one candidate each. A deletion
/// and an insertion carrying the same tokens merge into one reorder candidate,
/// as does a substitution whose two sides are permutations of each other.
/// Runs of matched tokens whose normalized positions differ by more than
/// `reorder_threshold` also become reorder candidates.
pub fn extract_segments_with(
    alignment: &Alignment,
    tokens1: &[String],
    tokens2: &[String],
    reorder_threshold: f64,
) -> Vec<SegmentPairCandidate> {
    let (n1, n2) = (tokens1.len(), tokens2.len());
    let mut gaps: Vec<SegmentPairCandidate> = Vec::new();
    let mut moved: Vec<SegmentPairCandidate> = Vec::new();

    // consumed-so-far counters give insertion points for empty spans
    let (mut next_i, mut next_j) = (0usize, 0usize);
    let mut run: Option<(Span, Span)> = None;
    let mut moved_run: Option<(Span, Span)> = None;

    let close = |run: &mut Option<(Span, Span)>, out: &mut Vec<SegmentPairCandidate>| {
        if let Some((s1, s2)) = run.take() {
            let kind = match (s1.is_empty(), s2.is_empty()) {
                (false, false) => CandidateKind::Substitution,
                (false, true) => CandidateKind::Deletion,
                _ => CandidateKind::Insertion,
            };
            out.push(SegmentPairCandidate { span1: s1, span2: s2, kind });
        }
    };

    for op in &alignment.ops {
        match *op {
            EditOp::Match(i, j) => {
                close(&mut run, &mut gaps);
                let deviates = (norm_pos(i, n1) - norm_pos(j, n2)).abs() > reorder_threshold;
                match (&mut moved_run, deviates) {
                    (Some((s1, s2)), true) if s1.end == i && s2.end == j => {
                        s1.end = i + 1;
                        s2.end = j + 1;
                    }
                    (_, true) => {
                        if let Some((s1, s2)) = moved_run.take() {
                            moved.push(SegmentPairCandidate {
                                span1: s1,
                                span2: s2,
                                kind: CandidateKind::Reorder,
                            });
                        }
                        moved_run = Some((Span::new(i, i + 1), Span::new(j, j + 1)));
                    }
                    (_, false) => {
                        if let Some((s1, s2)) = moved_run.take() {
                            moved.push(SegmentPairCandidate {
                                span1: s1,
                                span2: s2,
                                kind: CandidateKind::Reorder,
                            });
                        }
                    }
                }
                next_i = i + 1;
                next_j = j + 1;
            }
            _ => {
                if let Some((s1, s2)) = moved_run.take() {
                    moved.push(SegmentPairCandidate {
                        span1: s1,
                        span2: s2,
                        kind: CandidateKind::Reorder,
                    });
                }
                let (s1, s2) = run.get_or_insert((Span::empty_at(next_i), Span::empty_at(next_j)));
                if let Some(i) = op.left() {
                    if s1.is_empty() {
                        *s1 = Span::new(i, i + 1);
                    } else {
                        s1.end = i + 1;
                    }
                    next_i = i + 1;
                }
                if let Some(j) = op.right() {
                    if s2.is_empty() {
                        *s2 = Span::new(j, j + 1);
                    } else {
                        s2.end = j + 1;
                    }
                    next_j = j + 1;
                }
            }
        }
    }
    close(&mut run, &mut gaps);
    if let Some((s1, s2)) = moved_run.take() {
        moved.push(SegmentPairCandidate {
            span1: s1,
            span2: s2,
            kind: CandidateKind::Reorder,
        });
    }

    // substitution whose sides are permutations of each other
    for c in gaps.iter_mut() {
        if c.kind == CandidateKind::Substitution {
            let a = folded(tokens1, c.span1);
            let b = folded(tokens2, c.span2);
            if a != b {
                let (mut sa, mut sb) = (a.clone(), b.clone());
                sa.sort();
                sb.sort();
                if sa == sb {
                    c.kind = CandidateKind::Reorder;
                }
            }
        }
    }

    // a deleted block that reappears as an inserted block elsewhere
    let mut merged: Vec<SegmentPairCandidate> = Vec::new();
    let mut consumed = vec![false; gaps.len()];
    for d in 0..gaps.len() {
        if consumed[d] || gaps[d].kind != CandidateKind::Deletion {
            continue;
        }
        let del_tokens = folded(tokens1, gaps[d].span1);
        let partner = (0..gaps.len()).find(|&k| {
            !consumed[k]
                && gaps[k].kind == CandidateKind::Insertion
                && folded(tokens2, gaps[k].span2) == del_tokens
        });
        if let Some(k) = partner {
            consumed[d] = true;
            consumed[k] = true;
            merged.push(SegmentPairCandidate {
                span1: gaps[d].span1,
                span2: gaps[k].span2,
                kind: CandidateKind::Reorder,
            });
        }
    }

    let mut out: Vec<SegmentPairCandidate> = gaps
        .into_iter()
        .zip(consumed)
        .filter_map(|(c, used)| (!used).then_some(c))
        .chain(merged)
        .chain(moved)
        .collect();
    out.sort_by_key(|c| (c.span1.start, c.span1.end, c.span2.start, c.span2.end));
    out
}
