//! Rule-based typed generation followed by rule-based detection.

use paratype::align::{tokenize, TokenizerPolicy};
use paratype::baseline::{detect_types, generate_typed, LexiconSet, TypedRequest};
use paratype::taxonomy::names;
use paratype::{Span, Taxonomy};

fn main() {
    let tax = Taxonomy::default();
    let lex = LexiconSet::demo();
    let source = tokenize("We can not finish the report today", &TokenizerPolicy::ALIGNMENT);

    let requests = [
        TypedRequest { span: Span::new(1, 2), type_id: tax.id_of(names::MODAL_VERB) },
        TypedRequest { span: Span::new(6, 7), type_id: tax.id_of(names::ADDITION_DELETION) },
    ];
    let generated = generate_typed(&source, &requests, &lex, &tax, 3).expect("valid requests");
    println!("source:    {}", source.join(" "));
    println!("generated: {}", generated.text);
    for s in &generated.skipped {
        println!("skipped {:?}: {}", s.request.span, s.reason);
    }

    for a in detect_types(&source, &generated.tokens, &lex, &tax) {
        println!("detected {:<30} {:?} -> {:?}", tax.name_of(a.type_id).unwrap_or("?"), a.span1, a.span2);
    }
}
