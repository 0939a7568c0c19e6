//! Brute-force reference implementations and random input generators shared
//! by the oracle and acceptance tests. Each oracle is written from the metric
//! definition without reusing library code.

#![allow(dead_code)]

use paratype::baseline::{detect_types, generate_typed, LexiconSet, TypedRequest};
use paratype::corpus::{AnnotatedPair, SegmentAnnotation};
use paratype::synth::typed_source;
use paratype::taxonomy::names;
use paratype::Taxonomy;
use paratype::{Span, TypeId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const VOCAB: [&str; 6] = ["a", "b", "c", "d", "A", "e"];

pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize, min_len: usize) -> Vec<String> {
    let n = rng.gen_range(min_len..=max_len);
    (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string()).collect()
}

fn occurrences(tokens: &[String], gram: &[String]) -> u64 {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len()).filter(|&i| tokens[i..i + gram.len()] == *gram).count() as u64
}

/// Clipped overlap, candidate total, reference total.
pub fn ngram_overlap(c: &[String], r: &[String], n: usize) -> (u64, u64, u64) {
    let total = |t: &[String]| if t.len() >= n { (t.len() - n + 1) as u64 } else { 0 };
    let mut distinct: Vec<&[String]> = Vec::new();
    if c.len() >= n {
        for i in 0..=c.len() - n {
            let g = &c[i..i + n];
            if !distinct.contains(&g) {
                distinct.push(g);
            }
        }
    }
    let overlap = distinct.iter().map(|g| occurrences(c, g).min(occurrences(r, g))).sum();
    (overlap, total(c), total(r))
}

fn prf(overlap: u64, c: u64, r: u64) -> (f64, f64, f64) {
    let p = if c == 0 { 0.0 } else { overlap as f64 / c as f64 };
    let q = if r == 0 { 0.0 } else { overlap as f64 / r as f64 };
    let f = if p + q == 0.0 { 0.0 } else { 2.0 * p * q / (p + q) };
    (p, q, f)
}

pub fn rouge_n(c: &[String], r: &[String], n: usize) -> (f64, f64, f64) {
    let (o, tc, tr) = ngram_overlap(c, r, n);
    prf(o, tc, tr)
}

fn is_subsequence(small: &[&String], big: &[String]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == *s))
}

/// LCS length by enumerating every subsequence of the shorter input.
pub fn lcs(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let pick: Vec<&String> = (0..short.len()).filter(|k| mask & (1 << k) != 0).map(|k| &short[k]).collect();
        if is_subsequence(&pick, long) {
            best = size;
        }
    }
    best
}

pub fn rouge_l(c: &[String], r: &[String]) -> (f64, f64, f64) {
    prf(lcs(c, r) as u64, c.len() as u64, r.len() as u64)
}

/// Sentence BLEU: up to 4-grams (fewer when the candidate is shorter),
/// add-one smoothing from bigrams on, brevity penalty.
pub fn bleu(c: &[String], r: &[String]) -> f64 {
    let order = c.len().min(4);
    if order == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 1..=order {
        let (o, t, _) = ngram_overlap(c, r, n);
        let p = if n == 1 { o as f64 / t as f64 } else { (o as f64 + 1.0) / (t as f64 + 1.0) };
        if p == 0.0 {
            return 0.0;
        }
        product *= p.powf(1.0 / order as f64);
    }
    let bp = if c.len() < r.len() { (1.0 - r.len() as f64 / c.len() as f64).exp() } else { 1.0 };
    bp * product
}

/// Word position deviation: k-th occurrences are paired per token.
pub fn wpd(c: &[String], r: &[String]) -> f64 {
    let pos = |i: usize, n: usize| if n < 2 { 0.0 } else { i as f64 / (n - 1) as f64 };
    let mut seen: Vec<&String> = Vec::new();
    let (mut sum, mut count) = (0.0, 0);
    for t in c {
        if seen.contains(&t) {
            continue;
        }
        seen.push(t);
        let pc: Vec<usize> = (0..c.len()).filter(|&i| &c[i] == t).collect();
        let pr: Vec<usize> = (0..r.len()).filter(|&j| &r[j] == t).collect();
        for (i, j) in pc.iter().zip(&pr) {
            sum += (pos(*i, c.len()) - pos(*j, r.len())).abs();
            count += 1;
        }
    }
    if count == 0 {
        1.0
    } else {
        sum / count as f64
    }
}

/// Lexical deviation: one minus Jaccard of lowercased token sets.
pub fn ld(c: &[String], r: &[String]) -> f64 {
    let set = |t: &[String]| {
        let mut v: Vec<String> = t.iter().map(|x| x.to_lowercase()).collect();
        v.sort();
        v.dedup();
        v
    };
    let (a, b) = (set(c), set(r));
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| {
            let less = xs.iter().filter(|y| *y < x).count() as f64;
            let equal = xs.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho as the Pearson correlation of mid-ranks; `None` when a
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}

/// Two-sided exact Wilcoxon p-value by enumerating all sign assignments of
/// the non-zero differences.
pub fn wilcoxon_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let r = ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let n = d.len();
    let w_plus: f64 = d.iter().zip(&r).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total: f64 = r.iter().sum();
    let stat = w_plus.min(total - w_plus);
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| r[k]).sum();
        if w <= stat + 1e-9 {
            hits += 1;
        }
    }
    (2.0 * hits as f64 / (1u64 << n) as f64).min(1.0)
}

/// Non-empty, pairwise non-overlapping spans over `len` tokens, in order.
/// Two neighbouring spans with the same type are kept apart by at least one
/// token, since a label tuple cannot separate touching runs of one label.
pub fn random_disjoint_spans(rng: &mut ChaCha8Rng, len: usize, types: &[TypeId]) -> Vec<(Span, TypeId)> {
    let mut out: Vec<(Span, TypeId)> = Vec::new();
    let mut i = 0;
    while i < len {
        if rng.gen_bool(0.4) {
            i += 1;
            continue;
        }
        let end = rng.gen_range(i + 1..=len.min(i + 4));
        let mut t = types[rng.gen_range(0..types.len())];
        if let Some((prev, pt)) = out.last() {
            if prev.end == i && *pt == t {
                t = *types.iter().find(|x| **x != t).expect("two types");
            }
        }
        out.push((Span::new(i, end), t));
        i = end;
    }
    out
}

/// A pair with random disjoint annotations on both sides.
pub fn random_annotated_pair(rng: &mut ChaCha8Rng, types: &[TypeId]) -> AnnotatedPair {
    let n1 = rng.gen_range(1..=15);
    let n2 = rng.gen_range(1..=15);
    let words = |n: usize| (0..n).map(|k| format!("w{k}")).collect::<Vec<_>>().join(" ");
    let left = random_disjoint_spans(rng, n1, types);
    let right = random_disjoint_spans(rng, n2, types);
    let mut annotations = Vec::new();
    for (k, (s, t)) in left.iter().enumerate() {
        annotations.push(SegmentAnnotation::new(k as u32 + 1, *t, *s, Span::empty_at(0)));
    }
    let base = annotations.len() as u32;
    for (k, (s, t)) in right.iter().enumerate() {
        annotations.push(SegmentAnnotation::new(base + k as u32 + 1, *t, Span::empty_at(0), *s));
    }
    AnnotatedPair::new("rand", &words(n1), &words(n2), true, annotations)
}

/// Types the baseline generator supports.
pub const SUPPORTED: [&str; 7] = [
    names::SPELLING,
    names::SAME_POLARITY_CONTEXTUAL,
    names::ADDITION_DELETION,
    names::CHANGE_OF_ORDER,
    names::PUNCTUATION,
    names::NEGATION_SWITCHING,
    names::MODAL_VERB,
];

pub fn recovery_rate(name: &str, trials: usize, seed: u64) -> (usize, usize, Vec<String>) {
    let tax = Taxonomy::default();
    let lex = LexiconSet::demo();
    let type_id = tax.id_of(name);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut fired) = (0, 0);
    let mut misses = Vec::new();
    for k in 0..trials {
        let (source, slot) = typed_source(name, &lex, &mut rng).unwrap();
        let g = generate_typed(&source, &[TypedRequest { span: slot, type_id }], &lex, &tax, k as u64).unwrap();
        if g.annotations.is_empty() {
            misses.push(format!("skipped: {}", source.join(" ")));
            continue;
        }
        fired += 1;
        let region: Span = g.annotations[0].span1;
        let found = detect_types(&source, &g.tokens, &lex, &tax)
            .iter()
            .any(|a| a.type_id == type_id && (a.span1.overlaps(&region) || a.span2.overlaps(&g.annotations[0].span2)));
        if found {
            hits += 1;
        } else {
            misses.push(format!("{} => {}", source.join(" "), g.text));
        }
    }
    (hits, fired, misses)
}

