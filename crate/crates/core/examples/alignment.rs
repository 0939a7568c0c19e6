//! Token alignment and the changed-region candidates derived from it.

use paratype::align::{align, extract_segments, tokenize, TokenizerPolicy};

fn main() {
    let policy = TokenizerPolicy::ALIGNMENT;
    let s1 = tokenize("Yesterday the committee approved the plan .", &policy);
    let s2 = tokenize("The committee approved the new plan yesterday .", &policy);

    let alignment = align(&s1, &s2);
    println!("{} matched tokens", alignment.match_count());
    for op in &alignment.ops {
        println!("  {op:?}");
    }
    for c in extract_segments(&alignment, &s1, &s2) {
        println!(
            "{:?}: {:?} -> {:?}",
            c.kind,
            &s1[c.span1.range()],
            &s2[c.span2.range()]
        );
    }
}
