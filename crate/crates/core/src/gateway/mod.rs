//! Client side for external completion models.
//!
//! [`prompt`] renders few-shot detection and generation prompts, [`parse`]
//! turns free-text answers back into predictions, [`run_batch`] sends prompts
//! through a [`Transport`] with bounded concurrency and retries, and
//! [`MockEndpoint`] is a scripted local server for tests and offline runs.
//!
//! The wire protocol is `POST {"prompt": str, "max_tokens": int}` answered by
//! `{"text": str}`. A [`ChatAdapter`] rewrites both sides for chat-style APIs.

mod batch;
mod mock;
pub mod parse;
pub mod prompt;
mod transport;

use thiserror::Error;

pub use batch::{run_batch, BatchItem};
pub use mock::{load_mock_rules, parse_mock_rules, MockEndpoint, MockRule, MockStats};
pub use parse::{
    parse_detection_response, parse_generation_response, parse_model_response, LineDiagnostic, ParsedDetection,
    ParsedResponse, ResponseTarget,
};
pub use prompt::{
    build_detection_prompt, build_generation_prompt, build_prompt, requests_of, shot_answer, GenerationRequest,
    PromptSpec, Target, Task,
};
pub use transport::{ChatAdapter, GatewayConfig, HttpTransport, Transport, TransportError};

pub const ENV_URL: &str = "PT_GATEWAY_URL";
pub const ENV_TOKEN: &str = "PT_GATEWAY_TOKEN";
pub const ENV_TIMEOUT_MS: &str = "PT_GATEWAY_TIMEOUT_MS";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid prompt: {0}")]
    Prompt(String),
    #[error("empty response")]
    EmptyResponse,
    #[error("invalid gateway configuration: {0}")]
    Config(String),
    #[error("endpoint unreachable for all {items} requests: {last}")]
    Unreachable { items: usize, last: String },
    #[error("mock endpoint: {0}")]
    Mock(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
