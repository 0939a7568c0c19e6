use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::Corpus;
use crate::taxonomy::{Taxonomy, TypeId};

/// Occurrence counts per type and per family.
///
/// An occurrence is one distinct (pair, segment id, type id) unit. The table
/// also keeps the alternative tallies: every raw annotation record, and the
/// number of pairs carrying at least one annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountTable {
    pub per_type: BTreeMap<String, u64>,
    pub per_group: BTreeMap<String, u64>,
    pub total: u64,
    pub raw_annotations: u64,
    pub pairs: u64,
    pub annotated_pairs: u64,
}

impl CountTable {
    pub fn type_count(&self, name: &str) -> u64 {
        self.per_type.get(name).copied().unwrap_or(0)
    }

    pub fn group_count(&self, name: &str) -> u64 {
        self.per_group.get(name).copied().unwrap_or(0)
    }

    pub fn empty(taxonomy: &Taxonomy) -> Self {
        CountTable {
            per_type: taxonomy.types().iter().map(|t| (t.name.clone(), 0)).collect(),
            per_group: taxonomy.groups().iter().map(|g| (g.clone(), 0)).collect(),
            total: 0,
            raw_annotations: 0,
            pairs: 0,
            annotated_pairs: 0,
        }
    }
}

pub fn type_counts(corpus: &Corpus) -> CountTable {
    let tax = &corpus.taxonomy;
    let mut table = CountTable::empty(tax);
    let mut by_id: BTreeMap<TypeId, u64> = BTreeMap::new();
    for pair in &corpus.pairs {
        table.pairs += 1;
        table.raw_annotations += pair.annotations.len() as u64;
        if pair.is_typed() {
            table.annotated_pairs += 1;
        }
        for (_, ty) in pair.units() {
            *by_id.entry(ty).or_insert(0) += 1;
        }
    }
    for (id, n) in by_id {
        if let Ok(t) = tax.lookup(id) {
            *table.per_type.entry(t.name.clone()).or_insert(0) += n;
            *table
                .per_group
                .entry(tax.group_name(t.group).to_string())
                .or_insert(0) += n;
            table.total += n;
        }
    }
    table
}

/// Families whose occurrence count reaches `threshold`.
pub fn eligible_groups(table: &CountTable, threshold: u64) -> BTreeSet<String> {
    table
        .per_group
        .iter()
        .filter(|(_, &n)| n >= threshold)
        .map(|(g, _)| g.clone())
        .collect()
}

/// Published occurrence counts of the ETPC release, by type name.
pub fn reference_counts() -> &'static [(&'static str, u64)] {
    &[
        ("Derivational Changes", 186),
        ("Inflectional Changes", 606),
        ("Modal Verb Changes", 183),
        ("Spelling changes", 628),
        ("Change of format", 236),
        ("Same Polarity Substitution (contextual)", 4138),
        ("Same Polarity Substitution (habitual)", 831),
        ("Same Polarity Substitution (named ent.)", 533),
        ("Converse substitution", 43),
        ("Opposite polarity substitution (contextual)", 15),
        ("Opposite polarity substitution (habitual)", 4),
        ("Synthetic/analytic substitution", 888),
        ("Coordination changes", 47),
        ("Diathesis alternation", 161),
        ("Ellipsis", 65),
        ("Negation switching", 20),
        ("Subordination and nesting changes", 468),
        ("Direct/indirect style alternations", 19),
        ("Punctuation changes", 293),
        ("Syntax/discourse structure changes", 305),
        ("Entailment", 81),
        ("Identity", 1782),
        ("Non-paraphrase", 424),
        ("Addition/Deletion", 4733),
        ("Change of order", 857),
        ("Semantic-based", 152),
    ]
}

/// Published per-family header counts, by family name.
///
/// These do not all equal the sum of their member rows: the syntax family is
/// printed as 731 while its members add up to 761.
pub fn reference_group_counts() -> &'static [(&'static str, u64)] {
    &[
        ("Morphology-based changes", 975),
        ("Lexicon-based changes", 6366),
        ("Lexico-syntactic based changes", 950),
        ("Syntax-based changes", 731),
        ("Discourse-based changes", 617),
        ("Extremes", 2287),
        ("Others", 5742),
    ]
}

/// Published total over all types.
pub const REFERENCE_TOTAL: u64 = 16_813;
/// Alternative published tally: annotation count and annotated sentence pairs.
pub const REFERENCE_ALT_TOTAL: u64 = 17_668;
pub const REFERENCE_ALT_PAIRS: u64 = 5_801;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountCheck {
    pub name: String,
    pub expected: u64,
    pub actual: u64,
}

impl CountCheck {
    pub fn ok(&self) -> bool {
        self.expected == self.actual
    }
}

/// Compares a count table row by row with the published counts, followed by
/// the total and the two alternative tallies.
pub fn verify_counts(table: &CountTable) -> Vec<CountCheck> {
    let mut checks: Vec<CountCheck> = reference_counts()
        .iter()
        .map(|&(name, expected)| CountCheck {
            name: name.to_string(),
            expected,
            actual: table.type_count(name),
        })
        .collect();
    checks.push(CountCheck {
        name: "total (distinct segment/type units)".into(),
        expected: REFERENCE_TOTAL,
        actual: table.total,
    });
    checks.push(CountCheck {
        name: "raw annotation records".into(),
        expected: REFERENCE_ALT_TOTAL,
        actual: table.raw_annotations,
    });
    checks.push(CountCheck {
        name: "pairs".into(),
        expected: REFERENCE_ALT_PAIRS,
        actual: table.pairs,
    });
    checks
}
