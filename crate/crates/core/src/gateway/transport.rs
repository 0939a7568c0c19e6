use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{GatewayError, ENV_TIMEOUT_MS, ENV_TOKEN, ENV_URL};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum TransportError {
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
}

impl TransportError {
    /// Whether another attempt can help. Client errors other than rate
    /// limiting are final.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Connect(_) => true,
            TransportError::Status { code, .. } => *code == 429 || *code >= 500,
            TransportError::Protocol(_) => false,
        }
    }
}

/// Sends one prompt and returns the completion text.
pub trait Transport: Send + Sync {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, TransportError>;
}

impl<F> Transport for F
where
    F: Fn(&str, u32) -> Result<String, TransportError> + Send + Sync,
{
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, TransportError> {
        self(prompt, max_tokens)
    }
}

/// Maps the native protocol onto another JSON API.
///
/// String values in `request` have `{{prompt}}` substituted; a value that is
/// exactly `"{{max_tokens}}"` becomes the number. The completion is read from
/// `response_pointer` (RFC 6901), e.g. `/choices/0/message/content`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatAdapter {
    pub request: Value,
    pub response_pointer: String,
}

impl ChatAdapter {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| GatewayError::Config(format!("adapter {}: {e}", path.display())))
    }

    pub fn render(&self, prompt: &str, max_tokens: u32) -> Value {
        fn walk(v: &Value, prompt: &str, max_tokens: u32) -> Value {
            match v {
                Value::String(s) if s == "{{max_tokens}}" => json!(max_tokens),
                Value::String(s) => Value::String(s.replace("{{prompt}}", prompt)),
                Value::Array(a) => Value::Array(a.iter().map(|x| walk(x, prompt, max_tokens)).collect()),
                Value::Object(o) => Value::Object(
                    o.iter()
                        .map(|(k, x)| (k.clone(), walk(x, prompt, max_tokens)))
                        .collect(),
                ),
                other => other.clone(),
            }
        }
        walk(&self.request, prompt, max_tokens)
    }

    pub fn extract(&self, response: &Value) -> Result<String, TransportError> {
        response
            .pointer(&self.response_pointer)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TransportError::Protocol(format!("no string at {}", self.response_pointer)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    pub url: String,
    pub token: Option<String>,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff_ms: u64,
    pub max_tokens: u32,
    pub adapter: Option<ChatAdapter>,
}

impl GatewayConfig {
    pub fn new(url: impl Into<String>) -> Self {
        GatewayConfig {
            url: url.into(),
            token: None,
            timeout_ms: 30_000,
            max_in_flight: 4,
            retries: 3,
            backoff_ms: 200,
            max_tokens: 256,
            adapter: None,
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        let url = std::env::var(ENV_URL).map_err(|_| GatewayError::Config(format!("{ENV_URL} is not set")))?;
        let mut config = GatewayConfig::new(url);
        config.token = std::env::var(ENV_TOKEN).ok().filter(|t| !t.is_empty());
        if let Ok(ms) = std::env::var(ENV_TIMEOUT_MS) {
            config.timeout_ms = ms
                .trim()
                .parse()
                .map_err(|_| GatewayError::Config(format!("{ENV_TIMEOUT_MS} is not a number: {ms:?}")))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.url.trim().is_empty() {
            return Err(GatewayError::Config("endpoint URL is empty".into()));
        }
        if self.timeout_ms == 0 {
            return Err(GatewayError::Config("timeout must be positive".into()));
        }
        if self.max_in_flight == 0 {
            return Err(GatewayError::Config("max in-flight must be at least 1".into()));
        }
        Ok(())
    }

    pub fn backoff(&self, retry: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1u64 << retry.min(16)))
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    token: Option<String>,
    adapter: Option<ChatAdapter>,
}

impl HttpTransport {
    pub fn new(config: &GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        Ok(HttpTransport {
            agent,
            url: config.url.clone(),
            token: config.token.clone(),
            adapter: config.adapter.clone(),
        })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, prompt: &str, max_tokens: u32) -> Result<String, TransportError> {
        let body = match &self.adapter {
            Some(a) => a.render(prompt, max_tokens),
            None => json!({ "prompt": prompt, "max_tokens": max_tokens }),
        };
        let mut request = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        let response = match request.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                return Err(TransportError::Status {
                    code,
                    body: r.into_string().unwrap_or_default(),
                })
            }
            Err(ureq::Error::Transport(t)) => return Err(TransportError::Connect(t.to_string())),
        };
        let value: Value = response
            .into_json()
            .map_err(|e| TransportError::Protocol(e.to_string()))?;
        match &self.adapter {
            Some(a) => a.extract(&value),
            None => value
                .get("text")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| TransportError::Protocol("missing \"text\" field".into())),
        }
    }
}
