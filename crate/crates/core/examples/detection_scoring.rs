//! Scores typed detection predictions against gold annotations.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use paratype::corpus::read_jsonl_file;
use paratype::scoring::{evaluate_detection, PredictedLabel, Prediction};
use paratype::taxonomy::names;
use paratype::Taxonomy;

fn main() {
    let tax = Arc::new(Taxonomy::default());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini.jsonl");
    let corpus = read_jsonl_file(&path, tax.clone()).expect("fixture corpus");

    // a detector that always answers with one contextual substitution
    let guess = PredictedLabel::of_type(tax.id_of(names::SAME_POLARITY_CONTEXTUAL));
    let predictions: HashMap<String, Prediction> = corpus
        .pairs
        .iter()
        .map(|p| (p.id.clone(), Prediction { is_paraphrase: true, labels: vec![guess.clone()] }))
        .collect();

    let (scores, report) = evaluate_detection(&corpus, &predictions, Default::default()).expect("all pairs predicted");
    for s in &scores {
        println!("{:<4} binary={} type_acc={:?} group_acc={:?}", s.pair_id, s.binary, s.type_acc, s.group_acc);
    }
    println!("{}", report.to_json());
}
