//! Seeded, type-balanced train/test split of a synthetic corpus.

use std::sync::Arc;

use paratype::corpus::{split_balanced, type_counts};
use paratype::synth::{synthetic_corpus, SynthConfig};
use paratype::Taxonomy;

fn main() {
    let corpus = synthetic_corpus(SynthConfig::new(2000, 7), Arc::new(Taxonomy::default()));
    let (train, test) = split_balanced(&corpus, 0.7, 42).expect("typed corpus");
    println!("{} pairs -> {} train / {} test", corpus.len(), train.len(), test.len());

    let (all, tr) = (type_counts(&corpus), type_counts(&train));
    for (name, n) in all.per_type.iter().filter(|(_, n)| **n > 0) {
        println!("{name:<45} {:>5} / {n:<5} target {:.1}", tr.type_count(name), 0.7 * *n as f64);
    }
}
