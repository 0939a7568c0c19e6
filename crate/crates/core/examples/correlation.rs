//! Type-by-type Spearman correlation of segment deviation profiles, raw and
//! z-rescaled.

use std::sync::Arc;

use paratype::analysis::{correlation_matrix, mean_off_diagonal, rescale, CorrelationOptions};
use paratype::synth::{synthetic_corpus, SynthConfig};
use paratype::Taxonomy;

fn main() {
    let corpus = synthetic_corpus(SynthConfig::new(3000, 5), Arc::new(Taxonomy::default()));
    let options = CorrelationOptions { jobs: 4, ..Default::default() };
    let matrix = correlation_matrix(&corpus, &options).expect("enough support");
    println!("{} labels, mean off-diagonal {:?}", matrix.labels.len(), mean_off_diagonal(&matrix));

    let z = rescale(&matrix).expect("non-constant entries");
    println!("mu {:?} sigma {:?}", z.mu, z.sigma);
    print!("{}", z.to_csv());
}
