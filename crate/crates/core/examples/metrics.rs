//! Sentence-level overlap and deviation metrics on a pair of token lists.

use paratype::align::{tokenize, TokenizerPolicy};
use paratype::metrics::{bleu, lexical_deviation, rouge_l, rouge_n, word_position_deviation};

fn main() {
    let policy = TokenizerPolicy::METRIC;
    let candidate = tokenize("Police kill the gunman.", &policy);
    let reference = tokenize("Police killed the gunman.", &policy);

    println!("candidate: {candidate:?}");
    println!("reference: {reference:?}");
    println!("BLEU      {:.4}", bleu(&candidate, &reference).expect("non-empty reference"));
    for n in 1..=2 {
        let r = rouge_n(&candidate, &reference, n);
        println!("ROUGE-{n}   p={:.4} r={:.4} f1={:.4}", r.precision, r.recall, r.f1);
    }
    let l = rouge_l(&candidate, &reference);
    println!("ROUGE-L   p={:.4} r={:.4} f1={:.4}", l.precision, l.recall, l.f1);
    println!("WPD       {:.4}", word_position_deviation(&candidate, &reference));
    println!("LD        {:.4}", lexical_deviation(&candidate, &reference));
}
