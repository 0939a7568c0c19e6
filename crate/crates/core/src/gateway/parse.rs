use serde::Serialize;

use super::prompt::Task;
use super::GatewayError;
use crate::align::{tokenize, TokenizerPolicy};
use crate::corpus::SegmentAnnotation;
use crate::scoring::{Label, PredictedLabel, Prediction};
use crate::span::Span;
use crate::taxonomy::{names, Taxonomy};

/// Phrases models use for the negative class, mapped to Non-paraphrase.
pub const NON_PARAPHRASE_ALIASES: &[&str] = &[
    "no paraphrase",
    "not a paraphrase",
    "not paraphrases",
    "non paraphrase",
    "non-paraphrase",
    "nonparaphrase",
];

/// Tokens of the pair a detection response refers to.
#[derive(Debug, Clone, Copy)]
pub struct ResponseTarget<'a> {
    pub tokens1: &'a [String],
    pub tokens2: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineDiagnostic {
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDetection {
    pub is_paraphrase: bool,
    pub labels: Vec<PredictedLabel>,
    pub unparsed: Vec<LineDiagnostic>,
}

impl ParsedDetection {
    pub fn into_prediction(self) -> Prediction {
        Prediction {
            is_paraphrase: self.is_paraphrase,
            labels: self.labels,
        }
    }

    /// Type-level labels that carry both spans, as annotation records.
    pub fn annotations(&self) -> Vec<SegmentAnnotation> {
        self.labels
            .iter()
            .filter_map(|l| match (l.label, l.span1, l.span2) {
                (Label::Type(t), Some(s1), Some(s2)) => {
                    Some(SegmentAnnotation::new(l.segment_id.unwrap_or(0), t, s1, s2))
                }
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedResponse {
    Detection(ParsedDetection),
    Generation(String),
}

fn lower(s: &str) -> String {
    s.to_lowercase()
}

/// Longest registered type or group name contained in `text`, compared
/// case-insensitively. Aliases of the negative class also count.
fn find_label(text: &str, taxonomy: &Taxonomy) -> Option<Label> {
    let hay = lower(text);
    let mut best: Option<(usize, Label)> = None;
    let mut offer = |name: &str, label: Label| {
        if hay.contains(&lower(name)) && best.map_or(true, |(len, _)| name.len() > len) {
            best = Some((name.len(), label));
        }
    };
    for t in taxonomy.types() {
        offer(&t.name, Label::Type(t.id));
    }
    for (g, name) in taxonomy.groups().iter().enumerate() {
        offer(name, Label::Group(crate::taxonomy::GroupId(g)));
    }
    if let Ok(np) = taxonomy.lookup(names::NON_PARAPHRASE) {
        for alias in NON_PARAPHRASE_ALIASES {
            offer(alias, Label::Type(np.id));
        }
    }
    best.map(|(_, l)| l)
}

/// A run as written in an answer line: text plus an optional occurrence
/// number, or an explicit empty span.
enum Run {
    Text(Vec<String>, usize),
    Empty(usize),
}

fn parse_run(text: &str) -> Option<Run> {
    let text = text.trim();
    if text == "(none)" {
        return Some(Run::Empty(0));
    }
    if let Some(pos) = text.strip_prefix("(none@").and_then(|r| r.strip_suffix(')')) {
        return pos.parse().ok().map(Run::Empty);
    }
    let (body, occ) = match text.rsplit_once(" #") {
        Some((body, n)) if !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) => (body, n.parse().ok()?),
        _ => (text, 1),
    };
    let body = body.trim().trim_matches('"').trim();
    let toks = tokenize(body, &TokenizerPolicy::ALIGNMENT);
    if toks.is_empty() {
        None
    } else {
        Some(Run::Text(toks, occ))
    }
}

/// Start of the `occ`-th occurrence of `needle` in `hay`; exact match first,
/// then case-insensitive.
fn find_tokens(hay: &[String], needle: &[String], occ: usize) -> Option<Span> {
    if needle.is_empty() || needle.len() > hay.len() || occ == 0 {
        return None;
    }
    let exact = |w: &[String]| w == needle;
    let folded = |w: &[String]| w.iter().zip(needle).all(|(a, b)| a.to_lowercase() == b.to_lowercase());
    for eq in [&exact as &dyn Fn(&[String]) -> bool, &folded] {
        let hit = hay
            .windows(needle.len())
            .enumerate()
            .filter(|(_, w)| eq(w))
            .nth(occ - 1)
            .map(|(i, _)| Span::new(i, i + needle.len()));
        if hit.is_some() {
            return hit;
        }
    }
    None
}

fn locate(run: &Run, tokens: &[String]) -> Option<Span> {
    match run {
        Run::Empty(p) => Some(Span::empty_at(*p)),
        Run::Text(toks, occ) => find_tokens(tokens, toks, *occ),
    }
}

/// Strips a trailing `[k]` segment marker from a label head.
fn segment_marker(head: &str) -> (String, Option<u32>) {
    let trimmed = head.trim_end();
    if let Some(open) = trimmed.rfind('[') {
        if let Some(inner) = trimmed[open + 1..].strip_suffix(']') {
            if let Ok(k) = inner.trim().parse() {
                return (trimmed[..open].to_string(), Some(k));
            }
        }
    }
    (trimmed.to_string(), None)
}

fn clean_line(line: &str) -> &str {
    line.trim()
        .trim_start_matches(|c: char| c == '-' || c == '*' || c == '•')
        .trim()
}

/// Parses a detection answer into labels with spans where the segment text
/// can be found in the pair.
///
/// Lines have the shape `label: segment` or `label [k]: s1 part => s2 part`;
/// a bare line naming a label (such as `no paraphrase`) is accepted too.
/// Lines that name no registered label are reported in `unparsed`.
pub fn parse_detection_response(
    text: &str,
    taxonomy: &Taxonomy,
    target: ResponseTarget<'_>,
) -> Result<ParsedDetection, GatewayError> {
    if text.trim().is_empty() {
        return Err(GatewayError::EmptyResponse);
    }
    let non_paraphrase = taxonomy.lookup(names::NON_PARAPHRASE).ok().map(|t| t.id);
    let mut labels: Vec<PredictedLabel> = Vec::new();
    let mut unparsed = Vec::new();
    let mut next_id = 1u32;
    let mut seen: Vec<(Option<Span>, Option<Span>, u32)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let mut line = clean_line(raw);
        if line.get(..7).is_some_and(|h| h.eq_ignore_ascii_case("answer:")) {
            line = line[7..].trim();
        }
        if line.is_empty() {
            continue;
        }
        let (head, body) = match line.split_once(':') {
            Some((h, b)) => (h, Some(b)),
            None => (line, None),
        };
        let (head, marker) = segment_marker(head);
        let Some(label) = find_label(&head, taxonomy) else {
            unparsed.push(LineDiagnostic {
                line: i + 1,
                text: raw.to_string(),
                reason: "no registered type or group name".into(),
            });
            continue;
        };

        let (mut span1, mut span2) = (None, None);
        let mut reason = None;
        if let Some(body) = body.map(str::trim).filter(|b| !b.is_empty()) {
            if let Some((left, right)) = body.split_once("=>") {
                span1 = parse_run(left).and_then(|r| locate(&r, target.tokens1));
                span2 = parse_run(right).and_then(|r| locate(&r, target.tokens2));
                if span1.is_none() || span2.is_none() {
                    reason = Some("segment text not found in the pair");
                }
            } else if let Some(run) = parse_run(body) {
                if let Some(s) = locate(&run, target.tokens2) {
                    span2 = Some(s);
                } else if let Some(s) = locate(&run, target.tokens1) {
                    span1 = Some(s);
                } else {
                    reason = Some("segment text not found in the pair");
                }
            }
        }
        if let Some(reason) = reason {
            unparsed.push(LineDiagnostic {
                line: i + 1,
                text: raw.to_string(),
                reason: format!("{reason}; kept as a location-free label"),
            });
        }

        let segment_id = match marker {
            Some(k) => {
                next_id = next_id.max(k + 1);
                k
            }
            None => match seen.iter().find(|(a, b, _)| *a == span1 && *b == span2 && (a.is_some() || b.is_some())) {
                Some((_, _, k)) => *k,
                None => {
                    let k = next_id;
                    next_id += 1;
                    k
                }
            },
        };
        seen.push((span1, span2, segment_id));
        labels.push(PredictedLabel {
            segment_id: Some(segment_id),
            label,
            span1,
            span2,
        });
    }

    let is_paraphrase = !labels
        .iter()
        .any(|l| matches!(l.label, Label::Type(t) if Some(t) == non_paraphrase));
    Ok(ParsedDetection {
        is_paraphrase,
        labels,
        unparsed,
    })
}

/// The generated sentence: the first non-empty line once a prompt echo and a
/// leading `Paraphrase:` tag are removed.
pub fn parse_generation_response(text: &str, prompt: Option<&str>) -> Result<String, GatewayError> {
    let mut rest = text;
    if let Some(p) = prompt.filter(|p| !p.is_empty()) {
        rest = rest.strip_prefix(p).unwrap_or(rest);
    }
    // chain-of-thought answers put the sentence after the last tag
    if let Some(pos) = rest.rfind("Paraphrase:") {
        rest = &rest[pos + "Paraphrase:".len()..];
    }
    rest.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| l.trim_matches('"').to_string())
        .filter(|l| !l.is_empty())
        .ok_or(GatewayError::EmptyResponse)
}

pub fn parse_model_response(
    text: &str,
    task: Task,
    taxonomy: &Taxonomy,
    target: ResponseTarget<'_>,
    prompt: Option<&str>,
) -> Result<ParsedResponse, GatewayError> {
    match task {
        Task::Detection => parse_detection_response(text, taxonomy, target).map(ParsedResponse::Detection),
        Task::Generation => parse_generation_response(text, prompt).map(ParsedResponse::Generation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Level;
    use crate::corpus::AnnotatedPair;
    use crate::gateway::prompt::shot_answer;
    use crate::taxonomy::{GroupId, TypeId};

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, &TokenizerPolicy::ALIGNMENT)
    }

    #[test]
    fn group_label_over_token() {
        let tax = Taxonomy::default();
        let (t1, t2) = (toks("She liked the film."), toks("She enjoyed the film."));
        let target = ResponseTarget { tokens1: &t1, tokens2: &t2 };
        let p = parse_detection_response("Lexicon-based changes: enjoyed", &tax, target).unwrap();
        assert!(p.is_paraphrase);
        assert_eq!(p.labels.len(), 1);
        assert_eq!(p.labels[0].label, Label::Group(GroupId(1)));
        assert_eq!(p.labels[0].span2, Some(Span::new(1, 2)));
        assert!(p.unparsed.is_empty());
    }

    #[test]
    fn negative_alias() {
        let tax = Taxonomy::default();
        let t: Vec<String> = vec![];
        let target = ResponseTarget { tokens1: &t, tokens2: &t };
        let p = parse_detection_response("no paraphrase", &tax, target).unwrap();
        assert!(!p.is_paraphrase);
        let p = parse_detection_response("Answer: No paraphrase.", &tax, target).unwrap();
        assert!(!p.is_paraphrase, "{p:?}");
    }

    #[test]
    fn empty_is_error() {
        let tax = Taxonomy::default();
        let t: Vec<String> = vec![];
        let target = ResponseTarget { tokens1: &t, tokens2: &t };
        assert!(matches!(parse_detection_response("  \n", &tax, target), Err(GatewayError::EmptyResponse)));
        assert!(matches!(parse_generation_response("", None), Err(GatewayError::EmptyResponse)));
    }

    #[test]
    fn longest_name_wins_and_junk_is_reported() {
        let tax = Taxonomy::default();
        let (t1, t2) = (toks("a b"), toks("a c"));
        let target = ResponseTarget { tokens1: &t1, tokens2: &t2 };
        let text = "Reasoning: look at it\nsame polarity substitution (contextual): c\nopposite polarity substitution (habitual): zzz";
        let p = parse_detection_response(text, &tax, target).unwrap();
        assert_eq!(p.labels.len(), 2);
        assert_eq!(p.labels[0].label, Label::Type(TypeId(6)));
        assert_eq!(p.labels[1].label, Label::Type(TypeId(9)));
        assert_eq!(p.labels[1].span1, None);
        assert_eq!(p.unparsed.len(), 2);
        assert_eq!(p.unparsed[0].line, 1);
    }

    #[test]
    fn shot_round_trip() {
        let tax = Taxonomy::default();
        let pair = AnnotatedPair::new(
            "x",
            "the cat saw the dog , he said .",
            "he said the dog was seen by the cat",
            true,
            vec![
                SegmentAnnotation::new(1, TypeId(13), Span::new(0, 5), Span::new(2, 9)),
                SegmentAnnotation::new(2, TypeId(18), Span::new(5, 6), Span::empty_at(0)),
                SegmentAnnotation::new(2, TypeId(18), Span::new(8, 9), Span::empty_at(0)),
                SegmentAnnotation::new(3, TypeId(23), Span::new(3, 4), Span::new(2, 3)),
                SegmentAnnotation::new(3, TypeId(22), Span::new(3, 4), Span::new(2, 3)),
            ],
        );
        let answer = shot_answer(&pair, &tax, Level::Type);
        let target = ResponseTarget {
            tokens1: &pair.s1.tokens,
            tokens2: &pair.s2.tokens,
        };
        let parsed = parse_detection_response(&answer, &tax, target).unwrap();
        let mut got = parsed.annotations();
        let mut want = pair.annotations.clone();
        got.sort_by_key(|a| (a.segment_id, a.type_id, a.span1.start));
        want.sort_by_key(|a| (a.segment_id, a.type_id, a.span1.start));
        assert_eq!(got, want, "{answer}");
        assert!(parsed.unparsed.is_empty());
    }

    #[test]
    fn generation_strips_echo_and_tag() {
        let prompt = "Sentence: a\nParaphrase:";
        let out = parse_generation_response("Sentence: a\nParaphrase: the new one\nmore", Some(prompt)).unwrap();
        assert_eq!(out, "the new one\nmore".lines().next().unwrap());
        assert_eq!(parse_generation_response("\n\n  Hello there. \n", None).unwrap(), "Hello there.");
        assert_eq!(
            parse_generation_response("Reasoning: swap it.\nParaphrase: \"Done.\"", None).unwrap(),
            "Done."
        );
    }
}
