use std::io::BufRead;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};

use super::GatewayError;

/// One scripted reply. The first rule whose `match` text occurs in the prompt
/// answers it; an empty `match` matches everything. `{{prompt}}` in
/// `respond` is replaced by the prompt. The first `fail_times` matching
/// requests get HTTP 503.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub pattern: String,
    pub respond: String,
    #[serde(default)]
    pub fail_times: u32,
    #[serde(default)]
    pub delay_ms: u64,
}

impl MockRule {
    pub fn new(pattern: impl Into<String>, respond: impl Into<String>) -> Self {
        MockRule {
            pattern: pattern.into(),
            respond: respond.into(),
            fail_times: 0,
            delay_ms: 0,
        }
    }
}

pub fn parse_mock_rules<R: BufRead>(reader: R) -> Result<Vec<MockRule>, GatewayError> {
    let mut rules = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rules.push(serde_json::from_str(&line).map_err(|e| GatewayError::Mock(format!("rule line {}: {e}", i + 1)))?);
    }
    Ok(rules)
}

pub fn load_mock_rules(path: &Path) -> Result<Vec<MockRule>, GatewayError> {
    parse_mock_rules(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Request counters kept by the mock server.
#[derive(Debug, Default)]
pub struct MockStats {
    pub requests: AtomicUsize,
    pub failures: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub peak_in_flight: AtomicUsize,
}

struct State {
    rules: Vec<MockRule>,
    failed: Mutex<Vec<u32>>,
    stats: Arc<MockStats>,
}

impl State {
    fn answer(&self, body: &str) -> (u16, String) {
        let prompt = match serde_json::from_str::<Value>(body) {
            Ok(v) => match v.get("prompt").and_then(Value::as_str) {
                Some(p) => p.to_string(),
                None => return (400, "missing prompt".into()),
            },
            Err(e) => return (400, e.to_string()),
        };
        let Some(k) = self.rules.iter().position(|r| prompt.contains(&r.pattern)) else {
            return (200, json!({ "text": prompt }).to_string());
        };
        let rule = &self.rules[k];
        {
            let mut failed = self.failed.lock().expect("mock lock");
            if failed[k] < rule.fail_times {
                failed[k] += 1;
                self.stats.failures.fetch_add(1, Ordering::SeqCst);
                return (503, "scripted failure".into());
            }
        }
        if rule.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(rule.delay_ms));
        }
        (200, json!({ "text": rule.respond.replace("{{prompt}}", &prompt) }).to_string())
    }
}

/// A local HTTP server speaking the native protocol, answering from rules.
/// Each request is handled on its own thread so concurrency is observable.
pub struct MockEndpoint {
    url: String,
    server: Arc<Server>,
    stats: Arc<MockStats>,
    handle: Option<JoinHandle<()>>,
}

impl MockEndpoint {
    pub fn start(rules: Vec<MockRule>) -> Result<Self, GatewayError> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(|e| GatewayError::Mock(e.to_string()))?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| GatewayError::Mock("no IP address".into()))?;
        let stats = Arc::new(MockStats::default());
        let state = Arc::new(State {
            failed: Mutex::new(vec![0; rules.len()]),
            rules,
            stats: Arc::clone(&stats),
        });
        let srv = Arc::clone(&server);
        let handle = std::thread::spawn(move || {
            let mut workers = Vec::new();
            while let Ok(mut request) = srv.recv() {
                let state = Arc::clone(&state);
                workers.push(std::thread::spawn(move || {
                    let stats = &state.stats;
                    stats.requests.fetch_add(1, Ordering::SeqCst);
                    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                    stats.peak_in_flight.fetch_max(now, Ordering::SeqCst);
                    let mut body = String::new();
                    let (code, text) = match request.as_reader().read_to_string(&mut body) {
                        Ok(_) => state.answer(&body),
                        Err(e) => (400, e.to_string()),
                    };
                    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
                    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
                    let _ = request.respond(Response::from_string(text).with_status_code(code).with_header(header));
                }));
            }
            for w in workers {
                let _ = w.join();
            }
        });
        Ok(MockEndpoint {
            url: format!("http://{addr}/"),
            server,
            stats,
            handle: Some(handle),
        })
    }

    /// Echoes every prompt back.
    pub fn echo() -> Result<Self, GatewayError> {
        Self::start(Vec::new())
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn stats(&self) -> &MockStats {
        &self.stats
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
