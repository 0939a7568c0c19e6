mod common;

use common::{recovery_rate, SUPPORTED};
use paratype::baseline::{generate_typed, LexiconSet, TypedRequest};
use paratype::synth::typed_source;
use paratype::taxonomy::names;
use paratype::Taxonomy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_supported_type_round_trips() {
    for name in SUPPORTED {
        let (hits, _, misses) = recovery_rate(name, 500, 17);
        assert!(hits * 100 >= 95 * 500, "{name}: {hits}/500, e.g. {:?}", &misses[..misses.len().min(5)]);
    }
}

#[test]
fn generation_is_deterministic() {
    let tax = Taxonomy::default();
    let lex = LexiconSet::demo();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (source, slot) = typed_source(names::SAME_POLARITY_CONTEXTUAL, &lex, &mut rng).unwrap();
    let req = [TypedRequest {
        span: slot,
        type_id: tax.id_of(names::SAME_POLARITY_CONTEXTUAL),
    }];
    let a = generate_typed(&source, &req, &lex, &tax, 9).unwrap();
    let b = generate_typed(&source, &req, &lex, &tax, 9).unwrap();
    assert_eq!(a, b);
    for (i, (s, t)) in source.iter().zip(&a.tokens).enumerate() {
        if !slot.contains(i) {
            assert_eq!(s, t);
        }
    }
}
