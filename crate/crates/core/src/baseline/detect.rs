use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::LexiconSet;
use crate::align::{align, extract_segments, is_punct_token, CandidateKind, SegmentPairCandidate};
use crate::corpus::SegmentAnnotation;
use crate::span::Span;
use crate::taxonomy::{names, Taxonomy, TypeId};

const SUFFIXES: &[&str] = &["ing", "ed", "es", "ly", "s"];

/// Light suffix stripper: drops one of s/es/ed/ing/ly, a trailing `e`, and a
/// doubled final consonant (`stopped` -> `stop`, `likes` -> `lik`, `like` -> `lik`).
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let mut s = w.as_str();
    for suf in SUFFIXES {
        if let Some(rest) = s.strip_suffix(suf) {
            if rest.chars().count() >= 3 {
                s = rest;
                break;
            }
        }
    }
    let mut out: Vec<char> = s.chars().collect();
    if out.len() > 3 && out.last() == Some(&'e') {
        out.pop();
    }
    let n = out.len();
    if n > 3 && out[n - 1] == out[n - 2] && !"aeiou".contains(out[n - 1]) {
        out.pop();
    }
    out.into_iter().collect()
}

fn strip_marks(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).collect::<String>().to_lowercase()
}

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty",
    "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety", "hundred", "thousand", "million",
    "billion", "percent", "and",
];

const MONTHS: &[&str] = &[
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
    "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

fn is_numeric(tokens: &[String]) -> bool {
    tokens.iter().any(|t| t.chars().any(|c| c.is_ascii_digit()))
        && tokens
            .iter()
            .all(|t| t.chars().all(|c| c.is_ascii_digit()) || matches!(t.as_str(), "." | "," | "%" | "$"))
}

fn is_number_words(tokens: &[String]) -> bool {
    tokens.iter().any(|t| t.to_lowercase() != "and")
        && tokens
            .iter()
            .all(|t| NUMBER_WORDS.contains(&t.to_lowercase().as_str()) || t == "-")
}

fn is_date_like(tokens: &[String], spelled: bool) -> bool {
    let has_month = tokens.iter().any(|t| MONTHS.contains(&t.to_lowercase().as_str()));
    let has_digits = tokens.iter().any(|t| t.chars().all(|c| c.is_ascii_digit()));
    let numeric_only = tokens
        .iter()
        .all(|t| t.chars().all(|c| c.is_ascii_digit()) || matches!(t.as_str(), "/" | "-" | "."));
    if spelled {
        has_month
    } else {
        has_digits && numeric_only
    }
}

fn joined(tokens: &[String]) -> String {
    tokens.join(" ")
}

struct Ctx<'a> {
    t1: &'a [String],
    t2: &'a [String],
    lex: &'a LexiconSet,
}

impl Ctx<'_> {
    fn is_spelling_variant(&self, a: &[String], b: &[String]) -> bool {
        let (ja, jb) = (joined(a), joined(b));
        ja.to_lowercase() == jb.to_lowercase()
            || strip_marks(&ja) == strip_marks(&jb)
            || strsim::levenshtein(&ja.to_lowercase(), &jb.to_lowercase()) <= 2
    }

    // Tries the candidate alone and widened by one shared neighbour on each side,
    // since a contraction often keeps part of its phrase (`I am` / `I'm`).
    fn is_contraction(&self, c: &SegmentPairCandidate) -> bool {
        let (s1, s2) = (c.span1, c.span2);
        let same = |i: usize, j: usize| {
            i < self.t1.len() && j < self.t2.len() && self.t1[i].to_lowercase() == self.t2[j].to_lowercase()
        };
        let left = s1.start > 0 && s2.start > 0 && same(s1.start - 1, s2.start - 1);
        let right = same(s1.end, s2.end);
        for l in [false, true] {
            for r in [false, true] {
                if (l && !left) || (r && !right) {
                    continue;
                }
                let a = &self.t1[s1.start - l as usize..s1.end + r as usize];
                let b = &self.t2[s2.start - l as usize..s2.end + r as usize];
                if self.lex.contraction_of(a).is_some_and(|other| {
                    other.len() == b.len() && other.iter().zip(b).all(|(x, y)| *x == y.to_lowercase())
                }) {
                    return true;
                }
            }
        }
        false
    }

    fn is_format_change(&self, a: &[String], b: &[String]) -> bool {
        (is_numeric(a) && is_number_words(b))
            || (is_numeric(b) && is_number_words(a))
            || (is_date_like(a, true) && is_date_like(b, false))
            || (is_date_like(b, true) && is_date_like(a, false))
    }

    fn is_modal_swap(&self, a: &[String], b: &[String]) -> bool {
        a.len() == 1 && b.len() == 1 && self.lex.is_modal(&a[0]) && self.lex.is_modal(&b[0])
    }

    fn is_inflection(&self, a: &[String], b: &[String]) -> bool {
        a.len() == 1 && b.len() == 1 && a[0].to_lowercase() != b[0].to_lowercase() && stem(&a[0]) == stem(&b[0])
    }

    fn any_pair(&self, a: &[String], b: &[String], rel: impl Fn(&str, &str) -> bool) -> bool {
        a.iter().any(|x| b.iter().any(|y| rel(x, y)))
    }

    fn is_negation(&self, a: &[String], b: &[String]) -> bool {
        let negs = |s: &[String]| s.iter().filter(|t| self.lex.is_negator(t)).count();
        self.any_pair(a, b, |x, y| self.lex.are_antonyms(x, y)) || (negs(a) == 0) != (negs(b) == 0)
    }

    fn classify(&self, c: &SegmentPairCandidate) -> &'static str {
        match c.kind {
            CandidateKind::Insertion | CandidateKind::Deletion => return names::ADDITION_DELETION,
            CandidateKind::Reorder => return names::CHANGE_OF_ORDER,
            CandidateKind::Substitution => {}
        }
        let a = &self.t1[c.span1.range()];
        let b = &self.t2[c.span2.range()];
        let punct_only = |s: &[String]| s.iter().all(|t| is_punct_token(t));
        if punct_only(a) || punct_only(b) {
            names::PUNCTUATION
        } else if self.is_spelling_variant(a, b) || self.is_contraction(c) {
            names::SPELLING
        } else if self.is_format_change(a, b) {
            names::CHANGE_OF_FORMAT
        } else if self.is_modal_swap(a, b) {
            names::MODAL_VERB
        } else if self.is_inflection(a, b) {
            names::INFLECTIONAL
        } else if self.any_pair(a, b, |x, y| self.lex.are_synonyms(x, y))
            || self.lex.are_synonyms(&joined(a), &joined(b))
        {
            names::SAME_POLARITY_CONTEXTUAL
        } else if self.is_negation(a, b) {
            names::NEGATION_SWITCHING
        } else {
            names::SAME_POLARITY_CONTEXTUAL
        }
    }
}

/// Heuristic type detector: aligns the two sentences, extracts changed
/// segments and labels each with the first matching rule.
///
/// Rule order: identical sentences, insertion/deletion, reorder, punctuation,
/// spelling (case, diacritics, edit distance up to 2, contraction table),
/// format (digits and number words, dates), modal verbs, inflection (same
/// stem), synonym table, negation (antonym table or a negator on one side),
/// and finally Same Polarity Substitution (contextual).
pub fn detect_types<S: AsRef<str>>(
    tokens1: &[S],
    tokens2: &[S],
    lexicons: &LexiconSet,
    taxonomy: &Taxonomy,
) -> Vec<SegmentAnnotation> {
    let t1: Vec<String> = tokens1.iter().map(|t| t.as_ref().to_string()).collect();
    let t2: Vec<String> = tokens2.iter().map(|t| t.as_ref().to_string()).collect();
    let id = |name: &str| taxonomy.lookup(name).map(|t| t.id).ok();

    if t1 == t2 {
        return match id(names::IDENTITY) {
            Some(identity) if !t1.is_empty() => vec![SegmentAnnotation::new(
                1,
                identity,
                Span::new(0, t1.len()),
                Span::new(0, t2.len()),
            )],
            _ => Vec::new(),
        };
    }

    let ctx = Ctx {
        t1: &t1,
        t2: &t2,
        lex: lexicons,
    };
    let alignment = align(&t1, &t2);
    let mut out = Vec::new();
    for c in extract_segments(&alignment, &t1, &t2) {
        // a taxonomy without the chosen type leaves the segment unlabeled
        let Some(type_id): Option<TypeId> = id(ctx.classify(&c)) else {
            continue;
        };
        out.push(SegmentAnnotation::new(out.len() as u32 + 1, type_id, c.span1, c.span2));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{tokenize, TokenizerPolicy};

    fn detect(a: &str, b: &str) -> Vec<(String, Span, Span)> {
        let tax = Taxonomy::default();
        let t = |s: &str| tokenize(s, &TokenizerPolicy::ALIGNMENT);
        detect_types(&t(a), &t(b), &LexiconSet::demo(), &tax)
            .into_iter()
            .map(|a| (tax.name_of(a.type_id).unwrap().to_string(), a.span1, a.span2))
            .collect()
    }

    fn names_of(a: &str, b: &str) -> Vec<String> {
        detect(a, b).into_iter().map(|x| x.0).collect()
    }

    #[test]
    fn identical_sentences() {
        assert_eq!(
            detect("She liked it.", "She liked it."),
            vec![(names::IDENTITY.to_string(), Span::new(0, 4), Span::new(0, 4))]
        );
    }

    #[test]
    fn contraction_is_spelling() {
        assert_eq!(names_of("He does not know.", "He doesn't know."), vec![names::SPELLING]);
        assert_eq!(names_of("I am here.", "I'm here."), vec![names::SPELLING]);
    }

    #[test]
    fn synonym_substitution() {
        assert_eq!(
            detect("She liked it", "She enjoyed it"),
            vec![(names::SAME_POLARITY_CONTEXTUAL.to_string(), Span::new(1, 2), Span::new(1, 2))]
        );
    }

    #[test]
    fn rule_table() {
        assert_eq!(names_of("She left today.", "She left."), vec![names::ADDITION_DELETION]);
        assert_eq!(names_of("a b c d e f", "a c b d e f"), vec![names::CHANGE_OF_ORDER]);
        assert_eq!(names_of("Yes, she did.", "Yes; she did."), vec![names::PUNCTUATION]);
        assert_eq!(names_of("The colour red.", "The color red."), vec![names::SPELLING]);
        assert_eq!(names_of("the Cafe", "the café"), vec![names::SPELLING]);
        assert_eq!(names_of("He paid 20 dollars", "He paid twenty dollars"), vec![names::CHANGE_OF_FORMAT]);
        assert_eq!(names_of("on 5/12 it", "on May twelfth it"), vec![names::CHANGE_OF_FORMAT]);
        assert_eq!(names_of("You can go", "You might go"), vec![names::MODAL_VERB]);
        assert_eq!(names_of("They jumping high", "They jumped high"), vec![names::INFLECTIONAL]);
        assert_eq!(names_of("It is good", "It is not bad"), vec![names::NEGATION_SWITCHING]);
        assert_eq!(names_of("I never swim", "I always swim"), vec![names::NEGATION_SWITCHING]);
        assert_eq!(names_of("She bought apples", "She bought pears"), vec![names::SAME_POLARITY_CONTEXTUAL]);
    }

    #[test]
    fn stemmer() {
        assert_eq!(stem("stopped"), "stop");
        assert_eq!(stem("likes"), stem("like"));
        assert_eq!(stem("walking"), stem("walked"));
        assert_eq!(stem("is"), "is");
    }

    #[test]
    fn empty_inputs() {
        let tax = Taxonomy::default();
        let none: [&str; 0] = [];
        assert!(detect_types(&none, &none, &LexiconSet::demo(), &tax).is_empty());
        let one = detect_types(&none, &["x"], &LexiconSet::demo(), &tax);
        assert_eq!(one.len(), 1);
        assert_eq!(tax.name_of(one[0].type_id), Some(names::ADDITION_DELETION));
    }
}
