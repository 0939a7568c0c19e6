use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AnnotatedPair, Corpus, CorpusError, RecordError, SegmentAnnotation, TypedText};
use crate::taxonomy::Taxonomy;

/// One line of the canonical JSONL format.
///
/// `tokens1`/`tokens2` are written only when a pair carries tokens that differ
/// from the default tokenization of its raw sentence (pre-tokenized imports).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub sentence1: String,
    pub sentence2: String,
    pub is_paraphrase: bool,
    #[serde(default)]
    pub annotations: Vec<SegmentAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens1: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens2: Option<Vec<String>>,
}

impl PairRecord {
    pub fn into_pair(self) -> AnnotatedPair {
        let text = |raw: String, tokens: Option<Vec<String>>| match tokens {
            Some(t) => TypedText::with_tokens(raw, t),
            None => TypedText::new(raw),
        };
        AnnotatedPair {
            id: self.id,
            s1: text(self.sentence1, self.tokens1),
            s2: text(self.sentence2, self.tokens2),
            is_paraphrase: self.is_paraphrase,
            annotations: self.annotations,
        }
    }

    pub fn from_pair(pair: &AnnotatedPair) -> Self {
        let tokens = |t: &TypedText| (!t.has_default_tokens()).then(|| t.tokens.clone());
        PairRecord {
            id: pair.id.clone(),
            sentence1: pair.s1.raw.clone(),
            sentence2: pair.s2.raw.clone(),
            is_paraphrase: pair.is_paraphrase,
            annotations: pair.annotations.clone(),
            tokens1: tokens(&pair.s1),
            tokens2: tokens(&pair.s2),
        }
    }
}

/// Parses canonical JSONL. Blank lines are skipped; every error carries its
/// 1-based line number.
pub fn parse_jsonl<R: BufRead>(
    reader: R,
    taxonomy: Arc<Taxonomy>,
    name: &str,
) -> Result<Corpus, CorpusError> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::at_line(lineno, RecordError::Malformed(e.to_string())))?;
        let pair = record.into_pair();
        pair.validate(&taxonomy)
            .map_err(|e| CorpusError::at_line(lineno, e))?;
        if !seen.insert(pair.id.clone()) {
            return Err(CorpusError::at_line(lineno, RecordError::DuplicateId(pair.id)));
        }
        pairs.push(pair);
    }
    Ok(Corpus {
        name: name.to_string(),
        pairs,
        taxonomy,
    })
}

pub fn parse_jsonl_str(text: &str, taxonomy: Arc<Taxonomy>) -> Result<Corpus, CorpusError> {
    parse_jsonl(text.as_bytes(), taxonomy, "inline")
}

pub fn read_jsonl_file(path: &Path, taxonomy: Arc<Taxonomy>) -> Result<Corpus, CorpusError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_jsonl(BufReader::new(File::open(path)?), taxonomy, &name)
}

pub fn write_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), CorpusError> {
    for pair in &corpus.pairs {
        let line = serde_json::to_string(&PairRecord::from_pair(pair))
            .map_err(|e| RecordError::Malformed(e.to_string()))?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_jsonl_file(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    write_jsonl(corpus, BufWriter::new(File::create(path)?))
}

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_lowercase().as_str() {
        "1" | "true" | "yes" | "paraphrase" => Some(true),
        "0" | "false" | "no" | "non-paraphrase" => Some(false),
        _ => None,
    }
}

/// Imports an untyped TSV corpus with columns `id, sentence1, sentence2, label`.
/// A header row starting with `id` is skipped.
pub fn import_tsv<R: Read>(
    reader: R,
    taxonomy: Arc<Taxonomy>,
    name: &str,
) -> Result<Corpus, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (k, row) in rdr.records().enumerate() {
        let lineno = k + 1;
        let row = row.map_err(|e| CorpusError::Tsv(e.to_string()))?;
        if k == 0 && row.get(0).is_some_and(|c| c.trim().eq_ignore_ascii_case("id")) {
            continue;
        }
        if row.len() < 4 {
            return Err(CorpusError::at_line(
                lineno,
                RecordError::Malformed(format!("expected 4 columns, found {}", row.len())),
            ));
        }
        let label = parse_label(&row[3]).ok_or_else(|| {
            CorpusError::at_line(lineno, RecordError::Malformed(format!("bad label {:?}", &row[3])))
        })?;
        let id = row[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::at_line(lineno, RecordError::DuplicateId(id)));
        }
        pairs.push(AnnotatedPair::new(id, &row[1], &row[2], label, Vec::new()));
    }
    Ok(Corpus {
        name: name.to_string(),
        pairs,
        taxonomy,
    })
}
