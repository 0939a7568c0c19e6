//! Prediction files.
//!
//! Detection: one JSON object per line,
//! `{"id": .., "is_paraphrase": .., "annotations": [..]}`. Annotations use the
//! corpus schema, except that `segment_id`, `span1` and `span2` may be left
//! out, and a family can be named with `"group": "<name>"` instead of a
//! `type_id`. When `is_paraphrase` is missing it is derived from the labels.
//!
//! Generation: `{"id": .., "generated": ".."}` per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Label, PredictedLabel, Prediction, ScoringError};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TypeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedRecordAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_id: Option<TypeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span1: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span2: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_paraphrase: Option<bool>,
    #[serde(default)]
    pub annotations: Vec<PredictedRecordAnnotation>,
}

impl PredictionRecord {
    pub fn from_prediction(id: impl Into<String>, pred: &Prediction, taxonomy: &Taxonomy) -> Self {
        PredictionRecord {
            id: id.into(),
            is_paraphrase: Some(pred.is_paraphrase),
            annotations: pred
                .labels
                .iter()
                .map(|l| {
                    let (type_id, group) = match l.label {
                        Label::Type(t) => (Some(t), None),
                        Label::Group(g) => (None, Some(taxonomy.group_name(g).to_string())),
                    };
                    PredictedRecordAnnotation {
                        segment_id: l.segment_id,
                        type_id,
                        group,
                        span1: l.span1,
                        span2: l.span2,
                    }
                })
                .collect(),
        }
    }

    pub fn into_prediction(self, taxonomy: &Taxonomy) -> Result<Prediction, ScoringError> {
        let labels = self
            .annotations
            .into_iter()
            .map(|a| {
                let label = match (a.type_id, a.group) {
                    (Some(t), None) if taxonomy.contains(t) => Label::Type(t),
                    (Some(t), None) => return Err(ScoringError::UnknownType(t.0)),
                    (None, Some(g)) => Label::Group(
                        taxonomy
                            .group_by_name(&g)
                            .ok_or(ScoringError::UnknownGroup(g))?,
                    ),
                    _ => {
                        return Err(ScoringError::InvalidGold(
                            "annotation needs exactly one of type_id and group".into(),
                        ))
                    }
                };
                Ok(PredictedLabel {
                    segment_id: a.segment_id,
                    label,
                    span1: a.span1,
                    span2: a.span2,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match self.is_paraphrase {
            Some(b) => Prediction {
                is_paraphrase: b,
                labels,
            },
            None => Prediction::from_labels(labels, taxonomy),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub generated: String,
}

fn lines<R: BufRead, T: for<'de> Deserialize<'de>>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, T), ScoringError>> {
    reader.lines().enumerate().filter_map(|(k, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(
            serde_json::from_str(&line)
                .map(|v| (k + 1, v))
                .map_err(|e| ScoringError::PredictionFormat {
                    line: k + 1,
                    message: e.to_string(),
                }),
        )
    })
}

fn duplicate(line: usize, id: &str) -> ScoringError {
    ScoringError::PredictionFormat {
        line,
        message: format!("duplicate id {id:?}"),
    }
}

pub fn parse_predictions<R: BufRead>(
    reader: R,
    taxonomy: &Taxonomy,
) -> Result<HashMap<String, Prediction>, ScoringError> {
    let mut out = HashMap::new();
    for item in lines::<_, PredictionRecord>(reader) {
        let (line, rec) = item?;
        let id = rec.id.clone();
        let pred = rec.into_prediction(taxonomy).map_err(|e| ScoringError::PredictionFormat {
            line,
            message: e.to_string(),
        })?;
        if out.insert(id.clone(), pred).is_some() {
            return Err(duplicate(line, &id));
        }
    }
    Ok(out)
}

pub fn read_predictions(path: &Path, taxonomy: &Taxonomy) -> Result<HashMap<String, Prediction>, ScoringError> {
    parse_predictions(BufReader::new(File::open(path)?), taxonomy)
}

pub fn parse_generation_predictions<R: BufRead>(reader: R) -> Result<HashMap<String, String>, ScoringError> {
    let mut out = HashMap::new();
    for item in lines::<_, GenerationRecord>(reader) {
        let (line, rec) = item?;
        if out.insert(rec.id.clone(), rec.generated).is_some() {
            return Err(duplicate(line, &rec.id));
        }
    }
    Ok(out)
}

pub fn read_generation_predictions(path: &Path) -> Result<HashMap<String, String>, ScoringError> {
    parse_generation_predictions(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_types_and_groups() {
        let tax = Taxonomy::default();
        let text = concat!(
            r#"{"id":"a","is_paraphrase":true,"annotations":[{"segment_id":1,"type_id":6,"span1":[0,1],"span2":[0,1]}]}"#,
            "\n\n",
            r#"{"id":"b","annotations":[{"group":"lexicon-based changes"},{"type_id":26}]}"#,
            "\n"
        );
        let preds = parse_predictions(text.as_bytes(), &tax).unwrap();
        assert_eq!(preds.len(), 2);
        assert_eq!(preds["a"].labels[0].span1, Some(Span::new(0, 1)));
        let b = &preds["b"];
        assert!(!b.is_paraphrase);
        assert_eq!(b.labels[0].label, Label::Group(tax.group_by_name("Lexicon-based changes").unwrap()));

        let back = PredictionRecord::from_prediction("b", b, &tax);
        assert_eq!(back.annotations[0].group.as_deref(), Some("Lexicon-based changes"));
    }

    #[test]
    fn rejects_bad_lines() {
        let tax = Taxonomy::default();
        for bad in [
            r#"{"id":"a","annotations":[{"type_id":20}]}"#,
            r#"{"id":"a","annotations":[{"group":"Nope"}]}"#,
            r#"{"id":"a","annotations":[{}]}"#,
            "not json",
            "{\"id\":\"a\"}\n{\"id\":\"a\"}",
        ] {
            assert!(matches!(
                parse_predictions(bad.as_bytes(), &tax),
                Err(ScoringError::PredictionFormat { .. })
            ));
        }
    }

    #[test]
    fn generation_records() {
        let g = parse_generation_predictions(r#"{"id":"x","generated":"She enjoyed it."}"#.as_bytes()).unwrap();
        assert_eq!(g["x"], "She enjoyed it.");
    }
}
