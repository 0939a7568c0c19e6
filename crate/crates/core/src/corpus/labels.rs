//! Per-token label tuples: position `i` carries the type id annotated on token
//! `i`, or 0 when the token is unannotated.

use serde::{Deserialize, Serialize};

use super::{AnnotatedPair, RecordError, SegmentAnnotation};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TypeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSeq {
    pub labels: Vec<TypeId>,
}

impl LabelSeq {
    pub fn zeros(len: usize) -> Self {
        LabelSeq {
            labels: vec![TypeId::NONE; len],
        }
    }

    pub fn from_ids(ids: &[u16]) -> Self {
        LabelSeq {
            labels: ids.iter().map(|&i| TypeId(i)).collect(),
        }
    }

    pub fn as_ids(&self) -> Vec<u16> {
        self.labels.iter().map(|t| t.0).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Which sentence of a pair a label sequence refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Encodes a pair's annotations as one label tuple per sentence.
///
/// Where annotations overlap, a token keeps the label of the annotation with the
/// smaller segment id (list order among equal ids).
pub fn encode_token_labels(pair: &AnnotatedPair) -> (LabelSeq, LabelSeq) {
    let mut first = LabelSeq::zeros(pair.s1.len());
    let mut second = LabelSeq::zeros(pair.s2.len());
    let mut ordered: Vec<&SegmentAnnotation> = pair.annotations.iter().collect();
    ordered.sort_by_key(|a| a.segment_id);
    for a in ordered {
        for (seq, span) in [(&mut first, a.span1), (&mut second, a.span2)] {
            let end = span.end.min(seq.labels.len());
            for slot in &mut seq.labels[span.start.min(end)..end] {
                if slot.is_none() {
                    *slot = a.type_id;
                }
            }
        }
    }
    (first, second)
}

/// Decodes a label tuple into annotations on the given side.
///
/// Each maximal run of one non-zero label becomes its own annotation with a
/// fresh segment id (1, 2, ... in run order); the other side's span is left
/// empty at position 0.
pub fn decode_token_labels<S: AsRef<str>>(
    tokens: &[S],
    seq: &LabelSeq,
    taxonomy: &Taxonomy,
    side: Side,
) -> Result<Vec<SegmentAnnotation>, RecordError> {
    if tokens.len() != seq.len() {
        return Err(RecordError::LengthMismatch {
            labels: seq.len(),
            tokens: tokens.len(),
        });
    }
    if let Some(bad) = seq
        .labels
        .iter()
        .find(|t| !t.is_none() && !taxonomy.contains(**t))
    {
        return Err(RecordError::UnknownType(bad.0));
    }

    let mut out = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        let label = seq.labels[i];
        let start = i;
        while i < seq.len() && seq.labels[i] == label {
            i += 1;
        }
        if label.is_none() {
            continue;
        }
        let run = Span::new(start, i);
        let (span1, span2) = match side {
            Side::Source => (run, Span::empty_at(0)),
            Side::Target => (Span::empty_at(0), run),
        };
        out.push(SegmentAnnotation::new(out.len() as u32 + 1, label, span1, span2));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tax() -> Taxonomy {
        Taxonomy::default()
    }

    #[test]
    fn worked_example_tuples() {
        let ann = vec![
            SegmentAnnotation::new(1, TypeId(26), Span::new(0, 4), Span::new(10, 14)),
            SegmentAnnotation::new(2, TypeId(5), Span::new(5, 6), Span::new(1, 3)),
            SegmentAnnotation::new(3, TypeId(6), Span::new(7, 8), Span::new(0, 1)),
            SegmentAnnotation::new(4, TypeId(25), Span::new(8, 19), Span::new(4, 5)),
        ];
        let pair = AnnotatedPair::new(
            "amrozi",
            "Amrozi accused his brother, whom he called `the witness`, of deliberately distorting his evidence.",
            "Referring to him as only `the witness`, Amrozi accused his brother of deliberately distorting his evidence.",
            true,
            ann,
        );
        let (l1, l2) = encode_token_labels(&pair);
        assert_eq!(
            l1.as_ids(),
            vec![26, 26, 26, 26, 0, 5, 0, 6, 25, 25, 25, 25, 25, 25, 25, 25, 25, 25, 25]
        );
        assert_eq!(
            l2.as_ids(),
            vec![6, 5, 5, 0, 25, 0, 0, 0, 0, 0, 26, 26, 26, 26, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn unannotated_pair_is_all_zero() {
        let pair = AnnotatedPair::new("p", "a b c", "a b", true, vec![]);
        let (l1, l2) = encode_token_labels(&pair);
        assert_eq!(l1, LabelSeq::zeros(3));
        assert_eq!(l2, LabelSeq::zeros(2));
    }

    #[test]
    fn single_annotation() {
        let t = TypeId(6);
        let pair = AnnotatedPair::new(
            "p",
            "a b c d",
            "a b c d",
            true,
            vec![SegmentAnnotation::new(1, t, Span::new(1, 3), Span::new(1, 3))],
        );
        assert_eq!(encode_token_labels(&pair).0.as_ids(), vec![0, 6, 6, 0]);
    }

    #[test]
    fn overlap_keeps_smaller_segment_id() {
        let pair = AnnotatedPair::new(
            "p",
            "a b c d",
            "a b c d",
            true,
            vec![
                SegmentAnnotation::new(2, TypeId(22), Span::new(0, 3), Span::new(0, 1)),
                SegmentAnnotation::new(1, TypeId(6), Span::new(1, 2), Span::new(0, 1)),
            ],
        );
        assert_eq!(encode_token_labels(&pair).0.as_ids(), vec![22, 6, 22, 0]);
    }

    #[test]
    fn decode_runs() {
        let toks = ["a", "b", "c", "d", "e"];
        let anns = decode_token_labels(&toks, &LabelSeq::from_ids(&[0, 5, 5, 0, 5]), &tax(), Side::Source)
            .unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!((anns[0].type_id, anns[0].span1), (TypeId(5), Span::new(1, 3)));
        assert_eq!((anns[1].type_id, anns[1].span1), (TypeId(5), Span::new(4, 5)));
        assert_ne!(anns[0].segment_id, anns[1].segment_id);

        assert!(decode_token_labels(&toks, &LabelSeq::zeros(5), &tax(), Side::Target)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn decode_errors() {
        assert!(matches!(
            decode_token_labels(&["a"], &LabelSeq::zeros(2), &tax(), Side::Source),
            Err(RecordError::LengthMismatch { .. })
        ));
        assert_eq!(
            decode_token_labels(&["a"], &LabelSeq::from_ids(&[20]), &tax(), Side::Source),
            Err(RecordError::UnknownType(20))
        );
    }

    #[test]
    fn decode_then_encode() {
        let toks = ["w", "x", "y", "z"];
        let seq = LabelSeq::from_ids(&[26, 26, 0, 25]);
        let anns = decode_token_labels(&toks, &seq, &tax(), Side::Target).unwrap();
        let pair = AnnotatedPair {
            id: "p".into(),
            s1: super::super::TypedText::new(""),
            s2: super::super::TypedText::new("w x y z"),
            is_paraphrase: true,
            annotations: anns,
        };
        assert_eq!(encode_token_labels(&pair).1, seq);
    }
}
