//! Rule-based reference systems: a type detector over alignment output and a
//! typed perturbation generator, both driven by a [`LexiconSet`].

mod detect;
mod generate;
mod lexicon;

use thiserror::Error;

use crate::span::Span;

pub use detect::{detect_types, stem};
pub use generate::{generate_typed, is_optional_adjunct, supported_types, Generated, SkippedRequest, TypedRequest};
pub use lexicon::{LexiconSet, DEMO_LEXICON};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("{0:?} is listed as both synonym and antonym of {1:?}")]
    ConflictingRelations(String, String),
    #[error("span {span} is invalid for a sentence of {len} tokens")]
    InvalidSpan { span: Span, len: usize },
    #[error("type id {0} is not supported by the generator")]
    UnsupportedType(u16),
    #[error("requests over {0} and {1} overlap")]
    OverlappingRequests(Span, Span),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
