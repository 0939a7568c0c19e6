//! Typed paraphrase corpora: data model, canonical JSONL I/O, importers,
//! token-label encoding, balanced splitting and occurrence counts.

mod counts;
mod etpc;
mod jsonl;
mod labels;
mod split;

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{tokenize, TokenizerPolicy};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TypeId};

pub use counts::{
    eligible_groups, reference_counts, reference_group_counts, type_counts, verify_counts, CountCheck, CountTable,
    REFERENCE_ALT_PAIRS, REFERENCE_ALT_TOTAL, REFERENCE_TOTAL,
};
pub use etpc::{import_etpc_xml, import_etpc_xml_str, EtpcImport, EtpcMapping, SkippedPair};
pub use jsonl::{
    import_tsv, parse_jsonl, parse_jsonl_str, read_jsonl_file, write_jsonl, write_jsonl_file,
    PairRecord,
};
pub use labels::{decode_token_labels, encode_token_labels, LabelSeq, Side};
pub use split::split_balanced;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("{0}")]
    Record(#[from] RecordError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("xml error in {file}: {message}")]
    Xml { file: String, message: String },
    #[error("unresolvable element {0:?}")]
    UnresolvableElement(String),
    #[error("tsv error: {0}")]
    Tsv(String),
    #[error("corpus is empty")]
    Empty,
    #[error("ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),
}

impl CorpusError {
    pub fn at_line(line: usize, source: RecordError) -> Self {
        CorpusError::Line { line, source }
    }
}

/// Violations of a single pair's invariants.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("span {span} out of range for sentence {side} with {len} tokens")]
    SpanOutOfRange { side: u8, span: Span, len: usize },
    #[error("annotation with both spans empty")]
    EmptyAnnotation,
    #[error("unknown type id {0}")]
    UnknownType(u16),
    #[error("duplicate pair id {0:?}")]
    DuplicateId(String),
    #[error("segment ids must form 1..k, got {0:?}")]
    NonContiguousSegments(Vec<u32>),
    #[error("label sequence length {labels} does not match {tokens} tokens")]
    LengthMismatch { labels: usize, tokens: usize },
}

/// A sentence with its cached tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedText {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl TypedText {
    /// Tokenizes `raw` with the alignment policy.
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw, &TokenizerPolicy::ALIGNMENT);
        TypedText { raw, tokens }
    }

    /// Uses externally supplied tokens, e.g. from a pre-tokenized release.
    pub fn with_tokens(raw: impl Into<String>, tokens: Vec<String>) -> Self {
        TypedText {
            raw: raw.into(),
            tokens,
        }
    }

    /// Whether the cached tokens are what the default tokenizer produces.
    pub fn has_default_tokens(&self) -> bool {
        tokenize(&self.raw, &TokenizerPolicy::ALIGNMENT) == self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn slice(&self, span: Span) -> &[String] {
        &self.tokens[span.range()]
    }
}

/// One (segment, type) annotation with its token spans in both sentences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentAnnotation {
    pub segment_id: u32,
    pub type_id: TypeId,
    pub span1: Span,
    pub span2: Span,
}

impl SegmentAnnotation {
    pub fn new(segment_id: u32, type_id: TypeId, span1: Span, span2: Span) -> Self {
        SegmentAnnotation {
            segment_id,
            type_id,
            span1,
            span2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedPair {
    pub id: String,
    pub s1: TypedText,
    pub s2: TypedText,
    pub is_paraphrase: bool,
    pub annotations: Vec<SegmentAnnotation>,
}

impl AnnotatedPair {
    pub fn new(
        id: impl Into<String>,
        sentence1: &str,
        sentence2: &str,
        is_paraphrase: bool,
        annotations: Vec<SegmentAnnotation>,
    ) -> Self {
        AnnotatedPair {
            id: id.into(),
            s1: TypedText::new(sentence1),
            s2: TypedText::new(sentence2),
            is_paraphrase,
            annotations,
        }
    }

    pub fn is_typed(&self) -> bool {
        !self.annotations.is_empty()
    }

    /// Distinct (segment, type) units; each counts once however many spans it has.
    pub fn units(&self) -> BTreeSet<(u32, TypeId)> {
        self.annotations
            .iter()
            .map(|a| (a.segment_id, a.type_id))
            .collect()
    }

    /// Checks span bounds, registered types and segment numbering.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), RecordError> {
        for a in &self.annotations {
            if a.type_id.is_none() || !taxonomy.contains(a.type_id) {
                return Err(RecordError::UnknownType(a.type_id.0));
            }
            for (side, span, len) in [(1u8, a.span1, self.s1.len()), (2, a.span2, self.s2.len())] {
                if !span.is_well_formed() || span.end > len {
                    return Err(RecordError::SpanOutOfRange { side, span, len });
                }
            }
            if a.span1.is_empty() && a.span2.is_empty() {
                return Err(RecordError::EmptyAnnotation);
            }
        }
        let ids: BTreeSet<u32> = self.annotations.iter().map(|a| a.segment_id).collect();
        if !ids.is_empty() && (ids.first() != Some(&1) || ids.last() != Some(&(ids.len() as u32))) {
            return Err(RecordError::NonContiguousSegments(ids.into_iter().collect()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub pairs: Vec<AnnotatedPair>,
    pub taxonomy: Arc<Taxonomy>,
}

impl Corpus {
    /// Builds a corpus after validating every pair and the uniqueness of ids.
    pub fn new(
        name: impl Into<String>,
        pairs: Vec<AnnotatedPair>,
        taxonomy: Arc<Taxonomy>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (k, p) in pairs.iter().enumerate() {
            p.validate(&taxonomy)
                .map_err(|e| CorpusError::at_line(k + 1, e))?;
            if !seen.insert(p.id.as_str()) {
                return Err(CorpusError::at_line(k + 1, RecordError::DuplicateId(p.id.clone())));
            }
        }
        Ok(Corpus {
            name: name.into(),
            pairs,
            taxonomy,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_typed(&self) -> bool {
        self.pairs.iter().any(AnnotatedPair::is_typed)
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    /// A corpus over a subset of pairs sharing this corpus's taxonomy.
    pub fn with_pairs(&self, name: impl Into<String>, pairs: Vec<AnnotatedPair>) -> Corpus {
        Corpus {
            name: name.into(),
            pairs,
            taxonomy: Arc::clone(&self.taxonomy),
        }
    }
}
