use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::{GatewayConfig, GatewayError, Transport, TransportError};

/// Outcome for one prompt after all attempts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchItem {
    pub index: usize,
    pub attempts: u32,
    pub result: Result<String, TransportError>,
}

impl BatchItem {
    pub fn text(&self) -> Option<&str> {
        self.result.as_deref().ok()
    }
}

fn attempt(transport: &dyn Transport, config: &GatewayConfig, index: usize, prompt: &str) -> BatchItem {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match transport.complete(prompt, config.max_tokens) {
            Ok(text) => {
                return BatchItem {
                    index,
                    attempts,
                    result: Ok(text),
                }
            }
            Err(e) if e.is_retryable() && attempts <= config.retries => {
                std::thread::sleep(config.backoff(attempts - 1));
            }
            Err(e) => {
                return BatchItem {
                    index,
                    attempts,
                    result: Err(e),
                }
            }
        }
    }
}

/// Sends every prompt and returns one item per prompt, in input order.
///
/// At most `config.max_in_flight` requests are outstanding at once. A failed
/// item does not stop the batch; only when every item fails to connect is the
/// whole batch reported as an error.
pub fn run_batch(
    transport: &dyn Transport,
    config: &GatewayConfig,
    prompts: &[String],
) -> Result<Vec<BatchItem>, GatewayError> {
    config.validate()?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<BatchItem>>> = Mutex::new(vec![None; prompts.len()]);
    let workers = config.max_in_flight.min(prompts.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(prompt) = prompts.get(i) else { break };
                let item = attempt(transport, config, i, prompt);
                slots.lock().expect("result lock")[i] = Some(item);
            });
        }
    });

    let items: Vec<BatchItem> = slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|s| s.expect("every prompt is processed"))
        .collect();
    let unreachable = items
        .iter()
        .all(|it| matches!(it.result, Err(TransportError::Connect(_))));
    if !items.is_empty() && unreachable {
        let last = match &items[items.len() - 1].result {
            Err(e) => e.to_string(),
            Ok(_) => unreachable!(),
        };
        return Err(GatewayError::Unreachable {
            items: items.len(),
            last,
        });
    }
    Ok(items)
}
