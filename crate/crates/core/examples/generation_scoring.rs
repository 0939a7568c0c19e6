//! Segment-level BLEU and ROUGE of a generated paraphrase.

use std::sync::Arc;

use paratype::align::TokenizerPolicy;
use paratype::corpus::{AnnotatedPair, SegmentAnnotation};
use paratype::scoring::score_generation;
use paratype::taxonomy::names;
use paratype::{Span, Taxonomy};

fn main() {
    let tax = Arc::new(Taxonomy::default());
    let gold = AnnotatedPair::new(
        "g1",
        "She liked the musical .",
        "She enjoyed the show .",
        true,
        vec![
            SegmentAnnotation::new(1, tax.id_of(names::SAME_POLARITY_CONTEXTUAL), Span::new(1, 2), Span::new(1, 2)),
            SegmentAnnotation::new(2, tax.id_of(names::SAME_POLARITY_CONTEXTUAL), Span::new(3, 4), Span::new(3, 4)),
        ],
    );
    for generated in ["She enjoyed the show.", "She loved the play.", "She liked the musical."] {
        let score = score_generation(&gold, generated, &tax, &TokenizerPolicy::METRIC).expect("valid gold");
        let pooled = score.pooled.expect("segments present");
        println!(
            "{generated:<26} BLEU {:.3}  ROUGE-1 {:.3}  ROUGE-L {:.3}",
            pooled.bleu, pooled.rouge1.f1, pooled.rouge_l.f1
        );
    }
}
