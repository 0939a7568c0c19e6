//! Evaluation toolkit for typed paraphrase generation and detection.
//!
//! The crate covers the full loop around paraphrase-type tasks:
//!
//! - [`taxonomy`]: the registry of 26 paraphrase types and their families.
//! - [`corpus`]: typed corpora (JSONL, ETPC XML, TSV), label tuples, balanced
//!   splits and occurrence counts.
//! - [`align`]: tokenization and LCS alignment of sentence pairs.
//! - [`metrics`]: BLEU, ROUGE, word position deviation, lexical deviation,
//!   embedding similarity and Spearman correlation.
//! - [`scoring`]: detection accuracy (binary, type, group), segment-level
//!   generation scores and the Wilcoxon signed-rank test.
//! - [`baseline`]: rule-based type detector and typed perturbation generator.
//! - [`analysis`]: type correlation matrices over metric profiles.
//! - [`gateway`]: prompt construction, response parsing and a bounded-concurrency
//!   client for external completion endpoints, plus a scripted mock endpoint.
//! - [`cli`]: the `paratype` command line.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod align;
pub mod analysis;
pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod gateway;
pub mod metrics;
pub mod scoring;
pub mod span;
pub mod synth;
pub mod taxonomy;

pub use span::Span;
pub use taxonomy::{Taxonomy, TypeId};
