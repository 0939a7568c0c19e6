use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::align::{detokenize, TokenizerPolicy};
use crate::analysis::Level;
use crate::corpus::{AnnotatedPair, SegmentAnnotation};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TypeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Detection,
    Generation,
}

/// One requested rewrite: apply `type_id` to the source text `segment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub type_id: TypeId,
    pub segment: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Pair { sentence1: String, sentence2: String },
    Rewrite { source: String, requests: Vec<GenerationRequest> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub task: Task,
    pub few_shots: Vec<AnnotatedPair>,
    pub chain_of_thought: bool,
    /// Whether the detection label set is the leaf types or the families.
    pub level: Level,
    pub target: Target,
}

impl PromptSpec {
    pub fn detection(pair: &AnnotatedPair, few_shots: Vec<AnnotatedPair>) -> Self {
        PromptSpec {
            task: Task::Detection,
            few_shots,
            chain_of_thought: false,
            level: Level::Type,
            target: Target::Pair {
                sentence1: pair.s1.raw.clone(),
                sentence2: pair.s2.raw.clone(),
            },
        }
    }

    /// A rewrite request built from a gold pair: one request per unit that
    /// has source text.
    pub fn generation(pair: &AnnotatedPair, few_shots: Vec<AnnotatedPair>) -> Self {
        PromptSpec {
            task: Task::Generation,
            few_shots,
            chain_of_thought: false,
            level: Level::Type,
            target: Target::Rewrite {
                source: pair.s1.raw.clone(),
                requests: requests_of(pair),
            },
        }
    }
}

fn text_of(tokens: &[String], span: Span) -> String {
    detokenize(&tokens[span.range()], &TokenizerPolicy::ALIGNMENT)
}

/// Requests implied by a gold pair, in segment order.
pub fn requests_of(pair: &AnnotatedPair) -> Vec<GenerationRequest> {
    let mut by_unit: std::collections::BTreeMap<(u32, TypeId), Vec<Span>> = Default::default();
    for a in &pair.annotations {
        if !a.span1.is_empty() {
            by_unit.entry((a.segment_id, a.type_id)).or_default().push(a.span1);
        }
    }
    by_unit
        .into_iter()
        .map(|((_, type_id), spans)| GenerationRequest {
            type_id,
            segment: spans
                .iter()
                .map(|s| text_of(&pair.s1.tokens, *s))
                .collect::<Vec<_>>()
                .join(" ... "),
        })
        .collect()
}

fn occurrence(tokens: &[String], span: Span) -> usize {
    let needle = &tokens[span.range()];
    (0..span.start)
        .filter(|&i| tokens.get(i..i + needle.len()) == Some(needle))
        .count()
        + 1
}

/// Renders one side of an annotation record for an answer line. Text that
/// occurs more than once in the sentence gets a `#k` suffix naming the k-th
/// occurrence; an empty span is written `(none)` or `(none@p)`.
pub fn render_run(tokens: &[String], span: Span) -> String {
    if span.is_empty() {
        return if span.start == 0 {
            "(none)".to_string()
        } else {
            format!("(none@{})", span.start)
        };
    }
    let text = text_of(tokens, span);
    let needle = &tokens[span.range()];
    let total = (0..=tokens.len().saturating_sub(needle.len()))
        .filter(|&i| &tokens[i..i + needle.len()] == needle)
        .count();
    if total > 1 {
        format!("{text} #{}", occurrence(tokens, span))
    } else {
        text
    }
}

fn label_name(a: &SegmentAnnotation, taxonomy: &Taxonomy, level: Level) -> String {
    match (taxonomy.lookup(a.type_id), level) {
        (Ok(t), Level::Type) => t.name.clone(),
        (Ok(t), Level::Group) => taxonomy.group_name(t.group).to_string(),
        (Err(_), _) => a.type_id.to_string(),
    }
}

/// The answer block of a worked example: one `Type [segment]: s1 => s2` line
/// per annotation record, in segment order.
pub fn shot_answer(pair: &AnnotatedPair, taxonomy: &Taxonomy, level: Level) -> String {
    let mut records: Vec<&SegmentAnnotation> = pair.annotations.iter().collect();
    records.sort_by_key(|a| (a.segment_id, a.type_id));
    if records.is_empty() {
        return if pair.is_paraphrase { "Identity".into() } else { "no paraphrase".into() };
    }
    records
        .iter()
        .map(|a| {
            format!(
                "{} [{}]: {} => {}",
                label_name(a, taxonomy, level),
                a.segment_id,
                render_run(&pair.s1.tokens, a.span1),
                render_run(&pair.s2.tokens, a.span2)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn reasoning(pair: &AnnotatedPair, taxonomy: &Taxonomy, level: Level) -> String {
    let mut parts = Vec::new();
    let mut records: Vec<&SegmentAnnotation> = pair.annotations.iter().collect();
    records.sort_by_key(|a| (a.segment_id, a.type_id));
    for a in records {
        parts.push(format!(
            "\"{}\" becomes \"{}\", which is {}",
            text_of(&pair.s1.tokens, a.span1),
            text_of(&pair.s2.tokens, a.span2),
            label_name(a, taxonomy, level)
        ));
    }
    if parts.is_empty() {
        "The sentences show no typed change.".into()
    } else {
        format!("Comparing the sentences segment by segment: {}.", parts.join("; "))
    }
}

fn label_list(taxonomy: &Taxonomy, level: Level) -> String {
    match level {
        Level::Type => taxonomy.types().iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join("; "),
        Level::Group => taxonomy.groups().join("; "),
    }
}

/// Few-shot detection prompt. Deterministic: the same spec always yields the
/// same bytes.
pub fn build_detection_prompt(spec: &PromptSpec, taxonomy: &Taxonomy) -> Result<String, GatewayError> {
    let Target::Pair { sentence1, sentence2 } = &spec.target else {
        return Err(GatewayError::Prompt("detection needs a sentence pair as target".into()));
    };
    if spec.chain_of_thought && spec.few_shots.is_empty() {
        return Err(GatewayError::Prompt("chain of thought needs at least one worked example".into()));
    }
    let kind = match spec.level {
        Level::Type => "paraphrase types",
        Level::Group => "paraphrase type groups",
    };
    let mut p = String::new();
    writeln!(p, "Identify the {kind} that turn Sentence 1 into Sentence 2.").unwrap();
    writeln!(p, "Possible labels: {}.", label_list(taxonomy, spec.level)).unwrap();
    writeln!(
        p,
        "Answer with one line per detected change in the form \"label: segment text\". \
         If the sentences are not paraphrases, answer \"no paraphrase\"."
    )
    .unwrap();
    if spec.chain_of_thought {
        writeln!(p, "Reason step by step before answering.").unwrap();
    }
    for (k, shot) in spec.few_shots.iter().enumerate() {
        writeln!(p, "\nExample {}:", k + 1).unwrap();
        writeln!(p, "Sentence 1: {}", shot.s1.raw).unwrap();
        writeln!(p, "Sentence 2: {}", shot.s2.raw).unwrap();
        if spec.chain_of_thought {
            writeln!(p, "Reasoning: {}", reasoning(shot, taxonomy, spec.level)).unwrap();
        }
        writeln!(p, "Answer:\n{}", shot_answer(shot, taxonomy, spec.level)).unwrap();
    }
    writeln!(p, "\nSentence 1: {sentence1}").unwrap();
    writeln!(p, "Sentence 2: {sentence2}").unwrap();
    if spec.chain_of_thought {
        write!(p, "Reasoning:").unwrap();
    } else {
        write!(p, "Answer:").unwrap();
    }
    Ok(p)
}

fn request_lines(requests: &[GenerationRequest], taxonomy: &Taxonomy) -> String {
    requests
        .iter()
        .map(|r| {
            let name = taxonomy.name_of(r.type_id).unwrap_or("unknown type");
            format!("- rewrite applying {name} to \"{}\"", r.segment)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Few-shot generation prompt with one instruction line per request.
pub fn build_generation_prompt(spec: &PromptSpec, taxonomy: &Taxonomy) -> Result<String, GatewayError> {
    let Target::Rewrite { source, requests } = &spec.target else {
        return Err(GatewayError::Prompt("generation needs a source sentence as target".into()));
    };
    if requests.is_empty() {
        return Err(GatewayError::Prompt("generation needs at least one request".into()));
    }
    if let Some(r) = requests.iter().find(|r| r.segment.trim().is_empty()) {
        return Err(GatewayError::Prompt(format!("request for type {} has no segment text", r.type_id)));
    }
    if spec.chain_of_thought && spec.few_shots.is_empty() {
        return Err(GatewayError::Prompt("chain of thought needs at least one worked example".into()));
    }
    let mut p = String::new();
    writeln!(p, "Paraphrase the sentence by applying each requested paraphrase type to its segment.").unwrap();
    writeln!(p, "Keep everything else unchanged and answer with the paraphrased sentence only.").unwrap();
    if spec.chain_of_thought {
        writeln!(p, "Reason step by step, then give the sentence on a line starting with \"Paraphrase:\".").unwrap();
    }
    for (k, shot) in spec.few_shots.iter().enumerate() {
        let shot_requests = requests_of(shot);
        writeln!(p, "\nExample {}:", k + 1).unwrap();
        writeln!(p, "Sentence: {}", shot.s1.raw).unwrap();
        writeln!(p, "Requests:\n{}", request_lines(&shot_requests, taxonomy)).unwrap();
        if spec.chain_of_thought {
            writeln!(p, "Reasoning: {}", reasoning(shot, taxonomy, Level::Type)).unwrap();
        }
        writeln!(p, "Paraphrase: {}", shot.s2.raw).unwrap();
    }
    writeln!(p, "\nSentence: {source}").unwrap();
    writeln!(p, "Requests:\n{}", request_lines(requests, taxonomy)).unwrap();
    write!(p, "Paraphrase:").unwrap();
    Ok(p)
}

pub fn build_prompt(spec: &PromptSpec, taxonomy: &Taxonomy) -> Result<String, GatewayError> {
    match spec.task {
        Task::Detection => build_detection_prompt(spec, taxonomy),
        Task::Generation => build_generation_prompt(spec, taxonomy),
    }
}
