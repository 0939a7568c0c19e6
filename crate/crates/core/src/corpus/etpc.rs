//! Importer for the ETPC XML release.
//!
//! Element names are configurable through [`EtpcMapping`]; the defaults follow
//! the public release (`pair`, `pair_id`, `sent1_raw`, ..., `paraphrase_type`,
//! `type_id`, `s1_scope`, `s2_scope`). Scopes are lists of token indices; a
//! non-contiguous scope becomes several annotations sharing one segment id.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use super::{AnnotatedPair, Corpus, CorpusError, RecordError, SegmentAnnotation, TypedText};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TypeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EtpcMapping {
    pub pair: String,
    pub id: String,
    pub sentence1: String,
    pub sentence2: String,
    /// Whitespace-separated pre-tokenized sentences; tokenized from raw text when absent.
    pub tokens1: Option<String>,
    pub tokens2: Option<String>,
    pub label: Option<String>,
    pub annotation: String,
    pub type_id: String,
    pub scope1: String,
    pub scope2: String,
    /// Scope indices start at 1 rather than 0.
    pub one_based: bool,
}

impl Default for EtpcMapping {
    fn default() -> Self {
        EtpcMapping {
            pair: "pair".into(),
            id: "pair_id".into(),
            sentence1: "sent1_raw".into(),
            sentence2: "sent2_raw".into(),
            tokens1: Some("sent1_tokenized".into()),
            tokens2: Some("sent2_tokenized".into()),
            label: Some("etpc_label".into()),
            annotation: "paraphrase_type".into(),
            type_id: "type_id".into(),
            scope1: "s1_scope".into(),
            scope2: "s2_scope".into(),
            one_based: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedPair {
    pub file: String,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct EtpcImport {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedPair>,
    /// Annotation elements whose type id is not registered (dropped).
    pub unregistered_annotations: usize,
    /// All annotation elements seen, registered or not.
    pub raw_annotation_elements: usize,
}

fn child_text<'a>(node: Node<'a, 'a>, name: &str) -> Option<&'a str> {
    node.children()
        .find(|c| c.is_element() && c.tag_name().name() == name)
        .map(|c| c.text().unwrap_or(""))
}

fn parse_indices(raw: &str, one_based: bool) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in raw.split(|c: char| !c.is_ascii_digit() && c != '-').filter(|p| !p.is_empty()) {
        let v: i64 = part.parse().map_err(|_| format!("bad scope index {part:?}"))?;
        let v = if one_based { v - 1 } else { v };
        if v < 0 {
            return Err(format!("negative scope index {part:?}"));
        }
        out.push(v as usize);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn runs(indices: &[usize]) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for &i in indices {
        match out.last_mut() {
            Some(s) if s.end == i => s.end = i + 1,
            _ => out.push(Span::new(i, i + 1)),
        }
    }
    out
}

fn parse_label(raw: &str) -> bool {
    !matches!(raw.trim().to_lowercase().as_str(), "0" | "false" | "no")
}

struct FileResult {
    pairs: Vec<AnnotatedPair>,
    skipped: Vec<SkippedPair>,
    unregistered: usize,
    raw: usize,
}

fn import_document(
    text: &str,
    file: &str,
    mapping: &EtpcMapping,
    taxonomy: &Taxonomy,
) -> Result<FileResult, CorpusError> {
    let doc = Document::parse(text).map_err(|e| CorpusError::Xml {
        file: file.to_string(),
        message: e.to_string(),
    })?;
    let pair_nodes: Vec<Node> = doc
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == mapping.pair)
        .collect();
    if pair_nodes.is_empty() {
        return Err(CorpusError::UnresolvableElement(mapping.pair.clone()));
    }

    let mut result = FileResult {
        pairs: Vec::new(),
        skipped: Vec::new(),
        unregistered: 0,
        raw: 0,
    };
    for (k, node) in pair_nodes.into_iter().enumerate() {
        let required = [&mapping.id, &mapping.sentence1, &mapping.sentence2];
        let fields: Vec<Option<&str>> = required.iter().map(|n| child_text(node, n)).collect();
        if let Some(pos) = fields.iter().position(Option::is_none) {
            // a wrong mapping shows up on the very first pair
            if k == 0 {
                return Err(CorpusError::UnresolvableElement(required[pos].clone()));
            }
            result.skipped.push(SkippedPair {
                file: file.to_string(),
                id: fields[0].unwrap_or("?").trim().to_string(),
                reason: format!("missing element {:?}", required[pos]),
            });
            continue;
        }
        let id = fields[0].unwrap().trim().to_string();
        let text_of = |raw: &str, tok_elem: &Option<String>| {
            let raw = raw.trim();
            match tok_elem.as_ref().and_then(|e| child_text(node, e)) {
                Some(t) if !t.trim().is_empty() => TypedText::with_tokens(
                    raw,
                    t.split_whitespace().map(String::from).collect(),
                ),
                _ => TypedText::new(raw),
            }
        };
        let s1 = text_of(fields[1].unwrap(), &mapping.tokens1);
        let s2 = text_of(fields[2].unwrap(), &mapping.tokens2);
        let is_paraphrase = mapping
            .label
            .as_ref()
            .and_then(|l| child_text(node, l))
            .map(parse_label)
            .unwrap_or(true);

        let mut annotations = Vec::new();
        let mut problem = None;
        let ann_nodes = node
            .descendants()
            .filter(|n| n.is_element() && n.tag_name().name() == mapping.annotation);
        for ann in ann_nodes {
            result.raw += 1;
            let type_id = child_text(ann, &mapping.type_id)
                .and_then(|t| t.trim().parse::<u16>().ok())
                .unwrap_or(0);
            if type_id == 0 || !taxonomy.contains(TypeId(type_id)) {
                result.unregistered += 1;
                continue;
            }
            let scopes = (
                parse_indices(child_text(ann, &mapping.scope1).unwrap_or(""), mapping.one_based),
                parse_indices(child_text(ann, &mapping.scope2).unwrap_or(""), mapping.one_based),
            );
            let (idx1, idx2) = match scopes {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    problem = Some(e);
                    break;
                }
            };
            if idx1.last().is_some_and(|&i| i >= s1.len()) || idx2.last().is_some_and(|&i| i >= s2.len()) {
                problem = Some(format!(
                    "scope exceeds token count ({} / {} tokens)",
                    s1.len(),
                    s2.len()
                ));
                break;
            }
            let (r1, r2) = (runs(&idx1), runs(&idx2));
            if r1.is_empty() && r2.is_empty() {
                continue;
            }
            let segment_id = annotations
                .last()
                .map(|a: &SegmentAnnotation| a.segment_id + 1)
                .unwrap_or(1);
            for k in 0..r1.len().max(r2.len()) {
                let span1 = r1.get(k).copied().unwrap_or(Span::empty_at(0));
                let span2 = r2.get(k).copied().unwrap_or(Span::empty_at(0));
                annotations.push(SegmentAnnotation::new(segment_id, TypeId(type_id), span1, span2));
            }
        }
        if let Some(reason) = problem {
            result.skipped.push(SkippedPair {
                file: file.to_string(),
                id,
                reason,
            });
            continue;
        }
        result.pairs.push(AnnotatedPair {
            id,
            s1,
            s2,
            is_paraphrase,
            annotations,
        });
    }
    Ok(result)
}

fn assemble(
    results: Vec<(String, Result<FileResult, CorpusError>)>,
    taxonomy: Arc<Taxonomy>,
    name: &str,
) -> Result<EtpcImport, CorpusError> {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    let (mut unregistered, mut raw) = (0, 0);
    let mut seen = HashSet::new();
    for (file, r) in results {
        let r = r?;
        unregistered += r.unregistered;
        raw += r.raw;
        skipped.extend(r.skipped);
        for p in r.pairs {
            if !seen.insert(p.id.clone()) {
                skipped.push(SkippedPair {
                    file: file.clone(),
                    reason: RecordError::DuplicateId(p.id.clone()).to_string(),
                    id: p.id,
                });
                continue;
            }
            pairs.push(p);
        }
    }
    let corpus = Corpus::new(name, pairs, taxonomy)?;
    Ok(EtpcImport {
        corpus,
        skipped,
        unregistered_annotations: unregistered,
        raw_annotation_elements: raw,
    })
}

/// Imports one in-memory XML document.
pub fn import_etpc_xml_str(
    text: &str,
    mapping: &EtpcMapping,
    taxonomy: Arc<Taxonomy>,
) -> Result<EtpcImport, CorpusError> {
    let r = import_document(text, "inline", mapping, &taxonomy);
    assemble(vec![("inline".into(), r)], taxonomy, "etpc")
}

/// Imports the given files. Files are parsed concurrently and merged in the
/// order given.
pub fn import_etpc_xml(
    files: &[PathBuf],
    mapping: &EtpcMapping,
    taxonomy: Arc<Taxonomy>,
) -> Result<EtpcImport, CorpusError> {
    let results: Vec<(String, Result<FileResult, CorpusError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .map(|path: &PathBuf| {
                let tax = &taxonomy;
                scope.spawn(move || {
                    let file = path.display().to_string();
                    let r = read(path).and_then(|text| import_document(&text, &file, mapping, tax));
                    (file, r)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("import thread panicked"))
            .collect()
    });
    assemble(results, taxonomy, "etpc")
}

fn read(path: &Path) -> Result<String, CorpusError> {
    Ok(std::fs::read_to_string(path)?)
}
