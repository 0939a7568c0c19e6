//! Few-shot detection through the model gateway, served by the local mock.

use std::path::Path;
use std::sync::Arc;

use paratype::corpus::{read_jsonl_file, AnnotatedPair};
use paratype::gateway::{
    build_detection_prompt, parse_detection_response, run_batch, GatewayConfig, HttpTransport, MockEndpoint, MockRule,
    PromptSpec, ResponseTarget,
};
use paratype::Taxonomy;

fn main() {
    let tax = Arc::new(Taxonomy::default());
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini.jsonl");
    let shots: Vec<AnnotatedPair> = read_jsonl_file(&fixture, tax.clone()).expect("fixture").pairs[..2].to_vec();
    let targets = [
        AnnotatedPair::new("t1", "She liked the film .", "She enjoyed the film .", true, vec![]),
        AnnotatedPair::new("t2", "A dog ran .", "A cat slept .", false, vec![]),
    ];

    let mut flaky = MockRule::new("A cat slept", "no paraphrase");
    flaky.fail_times = 1;
    let mock = MockEndpoint::start(vec![
        flaky,
        MockRule::new("", "Same Polarity Substitution (contextual): liked => enjoyed"),
    ])
    .expect("bind mock");

    let mut config = GatewayConfig::new(mock.url());
    config.backoff_ms = 10;
    let transport = HttpTransport::new(&config).expect("client");
    let prompts: Vec<String> = targets
        .iter()
        .map(|t| build_detection_prompt(&PromptSpec::detection(t, shots.clone()), &tax).expect("prompt"))
        .collect();
    println!("first prompt:\n{}\n", prompts[0]);

    for (item, target) in run_batch(&transport, &config, &prompts).expect("reachable").iter().zip(&targets) {
        let text = item.text().unwrap_or_default();
        let parsed = parse_detection_response(
            text,
            &tax,
            ResponseTarget { tokens1: &target.s1.tokens, tokens2: &target.s2.tokens },
        )
        .expect("non-empty answer");
        println!(
            "{} after {} attempt(s): paraphrase={} annotations={:?}",
            target.id,
            item.attempts,
            parsed.is_paraphrase,
            parsed.annotations()
        );
    }
}
