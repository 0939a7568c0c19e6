//! Word relations for the rule-based systems.
//!
//! File format: UTF-8 TSV, one relation per line, `relation<TAB>lhs<TAB>rhs`
//! with relation one of `syn`, `ant`, `contr`, `neg`, `modal`. Lines that are
//! blank or start with `#` are ignored.
//!
//! - `syn` and `ant` are symmetric word relations.
//! - `contr` pairs an expanded phrase with its contraction (`does not`,
//!   `doesn't`); both directions are recorded.
//! - `neg` declares a negator (`rhs` may be empty).
//! - `modal` puts two modal verbs in one interchange class; classes are the
//!   connected components of these edges.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::BaselineError;
use crate::align::{tokenize, TokenizerPolicy};

/// The demo lexicon shipped with the crate.
pub const DEMO_LEXICON: &str = include_str!("../../data/demo_lexicon.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconSet {
    synonyms: BTreeMap<String, BTreeSet<String>>,
    antonyms: BTreeMap<String, BTreeSet<String>>,
    // token sequence (lowercase) -> its counterpart form
    contractions: BTreeMap<Vec<String>, Vec<String>>,
    negators: BTreeSet<String>,
    modal_class: BTreeMap<String, usize>,
    modal_classes: Vec<BTreeSet<String>>,
}

fn phrase_tokens(phrase: &str) -> Vec<String> {
    tokenize(phrase, &TokenizerPolicy::METRIC)
}

fn insert_sym(map: &mut BTreeMap<String, BTreeSet<String>>, a: &str, b: &str) {
    map.entry(a.to_string()).or_default().insert(b.to_string());
    map.entry(b.to_string()).or_default().insert(a.to_string());
}

impl LexiconSet {
    pub fn parse(text: &str) -> Result<Self, BaselineError> {
        let mut lex = LexiconSet::default();
        let mut modal_edges: Vec<(String, String)> = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let err = |message: &str| BaselineError::Lexicon {
                line: line_no,
                message: message.to_string(),
            };
            let relation = fields[0];
            let lhs = fields.get(1).copied().unwrap_or("").to_lowercase();
            let rhs = fields.get(2).copied().unwrap_or("").to_lowercase();
            if fields.len() > 3 {
                return Err(err("expected at most three fields"));
            }
            if lhs.is_empty() {
                return Err(err("missing left-hand side"));
            }
            let need_rhs = || if rhs.is_empty() { Err(err("missing right-hand side")) } else { Ok(()) };
            match relation {
                "syn" => {
                    need_rhs()?;
                    insert_sym(&mut lex.synonyms, &lhs, &rhs);
                }
                "ant" => {
                    need_rhs()?;
                    insert_sym(&mut lex.antonyms, &lhs, &rhs);
                }
                "contr" => {
                    need_rhs()?;
                    let (a, b) = (phrase_tokens(&lhs), phrase_tokens(&rhs));
                    lex.contractions.insert(a.clone(), b.clone());
                    lex.contractions.insert(b, a);
                }
                "neg" => {
                    lex.negators.insert(lhs);
                }
                "modal" => {
                    need_rhs()?;
                    modal_edges.push((lhs, rhs));
                }
                other => return Err(err(&format!("unknown relation {other:?}"))),
            }
        }
        for (word, syns) in &lex.synonyms {
            if let Some(w) = lex.antonyms.get(word).and_then(|a| a.intersection(syns).next()) {
                return Err(BaselineError::ConflictingRelations(word.clone(), w.clone()));
            }
        }
        lex.build_modal_classes(modal_edges);
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        LexiconSet::parse(&std::fs::read_to_string(path)?)
    }

    /// The bundled demo lexicon.
    pub fn demo() -> Self {
        LexiconSet::parse(DEMO_LEXICON).expect("demo lexicon is valid")
    }

    fn build_modal_classes(&mut self, edges: Vec<(String, String)>) {
        let words: BTreeSet<&String> = edges.iter().flat_map(|(a, b)| [a, b]).collect();
        let index: BTreeMap<&String, usize> = words.iter().enumerate().map(|(k, w)| (*w, k)).collect();
        let mut parent: Vec<usize> = (0..words.len()).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (a, b) in &edges {
            let (ra, rb) = (find(&mut parent, index[a]), find(&mut parent, index[b]));
            parent[ra.max(rb)] = ra.min(rb);
        }
        let mut classes: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (w, &k) in &index {
            let root = find(&mut parent, k);
            classes.entry(root).or_default().insert((*w).clone());
        }
        self.modal_classes = classes.into_values().collect();
        self.modal_class = self
            .modal_classes
            .iter()
            .enumerate()
            .flat_map(|(k, c)| c.iter().map(move |w| (w.clone(), k)))
            .collect();
    }

    pub fn synonyms(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.synonyms.get(&word.to_lowercase())
    }

    pub fn antonyms(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.antonyms.get(&word.to_lowercase())
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        self.synonyms(a).is_some_and(|s| s.contains(&b.to_lowercase()))
    }

    pub fn are_antonyms(&self, a: &str, b: &str) -> bool {
        self.antonyms(a).is_some_and(|s| s.contains(&b.to_lowercase()))
    }

    /// The other form of a contraction entry, looked up by lowercase tokens.
    pub fn contraction_of(&self, tokens: &[String]) -> Option<&[String]> {
        let key: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        self.contractions.get(&key).map(Vec::as_slice)
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(&word.to_lowercase())
    }

    pub fn is_modal(&self, word: &str) -> bool {
        self.modal_class.contains_key(&word.to_lowercase())
    }

    /// Other members of `word`'s modal interchange class.
    pub fn modal_alternatives(&self, word: &str) -> Vec<&String> {
        let w = word.to_lowercase();
        match self.modal_class.get(&w) {
            Some(&k) => self.modal_classes[k].iter().filter(|m| **m != w).collect(),
            None => Vec::new(),
        }
    }

    pub fn modal_classes(&self) -> &[BTreeSet<String>] {
        &self.modal_classes
    }

    pub fn synonym_words(&self) -> impl Iterator<Item = &String> {
        self.synonyms.keys()
    }

    pub fn antonym_words(&self) -> impl Iterator<Item = &String> {
        self.antonyms.keys()
    }

    /// Expanded (multi-token, apostrophe-free) sides of the contraction table.
    pub fn expansions(&self) -> impl Iterator<Item = &Vec<String>> {
        self.contractions.keys().filter(|k| !k.iter().any(|t| t == "'"))
    }

    pub fn negators(&self) -> impl Iterator<Item = &String> {
        self.negators.iter()
    }
}
