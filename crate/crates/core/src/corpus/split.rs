//! Type-balanced train/eval splitting.
//!
//! The balancing unit is a (segment, type) occurrence. Each type gets a train
//! quota of `round(ratio * occurrences)`. Pairs are visited in a seeded shuffle
//! order, with multi-type pairs and pairs holding rare types first so that the
//! flexible single-type pairs at the end can settle the remaining quotas. Each
//! pair goes to the side whose quotas it overshoots least.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedPair, Corpus, CorpusError};
use crate::taxonomy::TypeId;

// None stands for the untyped ledger: pairs without annotations are balanced by count.
type Ledger = Option<TypeId>;

fn ledger_counts(pair: &AnnotatedPair) -> Vec<(Ledger, u64)> {
    if !pair.is_typed() {
        return vec![(None, 1)];
    }
    let mut counts: HashMap<TypeId, u64> = HashMap::new();
    for (_, ty) in pair.units() {
        *counts.entry(ty).or_insert(0) += 1;
    }
    let mut v: Vec<(Ledger, u64)> = counts.into_iter().map(|(t, n)| (Some(t), n)).collect();
    v.sort();
    v
}

/// Splits `corpus` so that every type's train share is as close to `ratio` as
/// its pairs allow. Deterministic for a given seed.
pub fn split_balanced(corpus: &Corpus, ratio: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(ratio));
    }
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }

    let ledgers: Vec<Vec<(Ledger, u64)>> = corpus.pairs.iter().map(ledger_counts).collect();
    let mut totals: HashMap<Ledger, u64> = HashMap::new();
    for l in &ledgers {
        for &(key, n) in l {
            *totals.entry(key).or_insert(0) += n;
        }
    }
    let train_quota: HashMap<Ledger, u64> = totals
        .iter()
        .map(|(&k, &n)| (k, (ratio * n as f64).round() as u64))
        .collect();

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // stable: shuffle order breaks ties
    order.sort_by_key(|&k| {
        let rarest = ledgers[k].iter().map(|(key, _)| totals[key]).min().unwrap_or(0);
        (std::cmp::Reverse(ledgers[k].len()), rarest)
    });

    let mut train_used: HashMap<Ledger, u64> = HashMap::new();
    let mut eval_used: HashMap<Ledger, u64> = HashMap::new();
    let mut to_train = vec![false; corpus.len()];

    for &k in &order {
        let (mut over_train, mut over_eval) = (0u64, 0u64);
        let (mut room_train, mut room_eval) = (0i64, 0i64);
        for &(key, n) in &ledgers[k] {
            let tq = train_quota[&key];
            let eq = totals[&key] - tq;
            let tu = train_used.get(&key).copied().unwrap_or(0);
            let eu = eval_used.get(&key).copied().unwrap_or(0);
            over_train += (tu + n).saturating_sub(tq) - tu.saturating_sub(tq);
            over_eval += (eu + n).saturating_sub(eq) - eu.saturating_sub(eq);
            room_train += tq as i64 - tu as i64;
            room_eval += eq as i64 - eu as i64;
        }
        let train = match over_train.cmp(&over_eval) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => room_train >= room_eval,
        };
        to_train[k] = train;
        let used = if train { &mut train_used } else { &mut eval_used };
        for &(key, n) in &ledgers[k] {
            *used.entry(key).or_insert(0) += n;
        }
    }

    let (mut train, mut eval) = (Vec::new(), Vec::new());
    for (pair, t) in corpus.pairs.iter().zip(to_train) {
        if t {
            train.push(pair.clone());
        } else {
            eval.push(pair.clone());
        }
    }
    Ok((
        corpus.with_pairs(format!("{}.train", corpus.name), train),
        corpus.with_pairs(format!("{}.eval", corpus.name), eval),
    ))
}
