//! Acceptance checks, one line per criterion.
//!
//! Criteria 4 and 5 need the ETPC release: point `PT_ETPC` at a canonical
//! JSONL file, an XML file or a directory of XML files. Without it they are
//! reported as SKIP.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::{Duration, Instant};

use paratype::analysis::{self, CorrelationOptions};
use paratype::corpus::{
    decode_token_labels, encode_token_labels, import_etpc_xml, read_jsonl_file, reference_counts, split_balanced,
    type_counts, AnnotatedPair, Corpus, EtpcMapping, SegmentAnnotation, Side, REFERENCE_ALT_PAIRS,
    REFERENCE_ALT_TOTAL, REFERENCE_TOTAL,
};
use paratype::gateway::{
    build_detection_prompt, parse_detection_response, run_batch, GatewayConfig, HttpTransport, MockEndpoint,
    MockRule, PromptSpec, ResponseTarget,
};
use paratype::metrics::{bleu, lexical_deviation, rouge_l, rouge_n, spearman, word_position_deviation};
use paratype::scoring::{score_detection, wilcoxon_signed_rank, PredictedLabel, Prediction};
use paratype::synth::{synthetic_corpus, SynthConfig};
use paratype::taxonomy::{names, GroupId};
use paratype::{Span, Taxonomy, TypeId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let within = |d: String| format!("{d} ({:.2}s, limit {}s)", took.as_secs_f64(), limit.as_secs());
    match out {
        Outcome::Pass(d) if took > limit => Outcome::Fail(within(format!("too slow: {d}"))),
        Outcome::Pass(d) => Outcome::Pass(within(d)),
        Outcome::Fail(d) => Outcome::Fail(within(d)),
        Outcome::Skip(d) => Outcome::Skip(d),
    }
}

fn check(ok: bool, pass: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if ok {
        Outcome::Pass(pass.into())
    } else {
        Outcome::Fail(fail.into())
    }
}

fn tax() -> Arc<Taxonomy> {
    Arc::new(Taxonomy::default())
}

fn toks(s: &str) -> Vec<String> {
    s.split(' ').map(String::from).collect()
}

fn etpc() -> Option<Result<Corpus, String>> {
    let path = PathBuf::from(std::env::var_os("PT_ETPC")?);
    let load = || -> Result<Corpus, String> {
        if path.extension().is_some_and(|e| e == "jsonl") {
            return read_jsonl_file(&path, tax()).map_err(|e| e.to_string());
        }
        let files: Vec<PathBuf> = if path.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(&path)
                .map_err(|e| e.to_string())?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "xml"))
                .collect();
            v.sort();
            v
        } else {
            vec![path.clone()]
        };
        import_etpc_xml(&files, &EtpcMapping::default(), tax())
            .map(|i| i.corpus)
            .map_err(|e| e.to_string())
    };
    Some(load())
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = 1e-12;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for k in 0..1000 {
        let c = common::random_tokens(&mut rng, 10, 0);
        let r = common::random_tokens(&mut rng, 10, 1);
        let mut cmp = |name: &str, got: f64, want: f64| {
            let d = (got - want).abs();
            worst = worst.max(d);
            if d > tol {
                failures.push(format!("{name} case {k}: {got} vs {want}"));
            }
        };
        cmp("bleu", bleu(&c, &r).unwrap(), common::bleu(&c, &r));
        for n in 1..=2 {
            let (g, w) = (rouge_n(&c, &r, n), common::rouge_n(&c, &r, n));
            cmp("rouge_n.p", g.precision, w.0);
            cmp("rouge_n.r", g.recall, w.1);
            cmp("rouge_n.f", g.f1, w.2);
        }
        let (g, w) = (rouge_l(&c, &r), common::rouge_l(&c, &r));
        cmp("rouge_l.p", g.precision, w.0);
        cmp("rouge_l.r", g.recall, w.1);
        cmp("rouge_l.f", g.f1, w.2);
        cmp("wpd", word_position_deviation(&c, &r), common::wpd(&c, &r));
        cmp("ld", lexical_deviation(&c, &r), common::ld(&c, &r));

        let n = rng.gen_range(2..=10);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64).collect();
        match (spearman(&xs, &ys), common::spearman(&xs, &ys)) {
            (Ok(a), Some(b)) => cmp("spearman", a, b),
            (Err(_), None) => {}
            (a, b) => failures.push(format!("spearman case {k}: {a:?} vs {b:?}")),
        }
    }
    check(
        failures.is_empty(),
        format!("1000 pairs, 6 metrics, max deviation {worst:.1e}"),
        format!("{} mismatches, first: {}", failures.len(), failures.first().cloned().unwrap_or_default()),
    )
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    let mut eq = |name: &str, got: f64, want: f64| {
        if got != want {
            bad.push(format!("{name}: {got} != {want}"));
        }
    };
    let l = rouge_l(&toks("the cat sat"), &toks("the cat sat on the mat"));
    eq("rouge_l.f1", l.f1, 2.0 / 3.0);
    eq("rouge_l.recall", l.recall, 0.5);
    eq("rouge_l.precision", l.precision, 1.0);
    let r2 = rouge_n(&toks("police killed the gunman"), &toks("police kill the gunman"), 2);
    eq("rouge_2.p", r2.precision, 1.0 / 3.0);
    eq("rouge_2.r", r2.recall, 1.0 / 3.0);
    eq("wpd", word_position_deviation(&toks("a b c"), &toks("c b a")), 2.0 / 3.0);
    eq("ld", lexical_deviation(&toks("a b c"), &toks("a b d")), 0.5);
    let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
    eq("wilcoxon.p", w.p_value, 0.0625);
    eq("wilcoxon.w_minus", w.w_minus, 0.0);

    let t = tax();
    let (lex, syn, dis) = (
        t.id_of(names::SAME_POLARITY_CONTEXTUAL),
        t.id_of(names::NEGATION_SWITCHING),
        t.id_of(names::PUNCTUATION),
    );
    let ann = |seg: u32, ty: TypeId, k: usize| SegmentAnnotation::new(seg, ty, Span::new(k, k + 1), Span::new(k, k + 1));
    let gold = AnnotatedPair::new(
        "ex",
        "a b c d",
        "a b c d",
        true,
        vec![ann(1, lex, 0), ann(2, syn, 1), ann(3, dis, 2), ann(4, lex, 3)],
    );
    let pred = Prediction {
        is_paraphrase: true,
        labels: [lex, lex, t.id_of(names::INFLECTIONAL), dis].into_iter().map(PredictedLabel::of_type).collect(),
    };
    let s = score_detection(&gold, &pred, &t, Default::default()).unwrap();
    eq("type_acc", s.type_acc.unwrap_or(f64::NAN), 2.0 / 3.0);
    check(bad.is_empty(), "6 fixtures exact", bad.join("; "))
}

fn random_prediction(rng: &mut ChaCha8Rng, gold: &AnnotatedPair, t: &Taxonomy) -> Prediction {
    let types: Vec<TypeId> = t.types().iter().map(|x| x.id).collect();
    let gold_types: Vec<TypeId> = gold.annotations.iter().map(|a| a.type_id).collect();
    let n = rng.gen_range(0..=6);
    let labels = (0..n)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            if roll < 4 && !gold_types.is_empty() {
                PredictedLabel::of_type(*gold_types.choose(rng).unwrap())
            } else if roll < 8 {
                PredictedLabel::of_type(*types.choose(rng).unwrap())
            } else {
                PredictedLabel::of_group(GroupId(rng.gen_range(0..t.groups().len())))
            }
        })
        .collect();
    Prediction { is_paraphrase: rng.gen_bool(0.7), labels }
}

fn criterion_3() -> Outcome {
    let t = tax();
    let mut corpora = vec![synthetic_corpus(SynthConfig::new(3000, 11), Arc::clone(&t))];
    let mini = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mini.jsonl");
    if let Ok(c) = read_jsonl_file(&mini, Arc::clone(&t)) {
        corpora.push(c);
    }
    let mut not_one = 0;
    let mut pairs = 0;
    for c in &corpora {
        for p in &c.pairs {
            pairs += 1;
            let s = score_detection(p, &Prediction::from_gold(p), &t, Default::default()).unwrap();
            if s.binary != 1 || s.type_acc != Some(1.0) || s.group_acc != Some(1.0) {
                not_one += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gold = &corpora[0].pairs;
    let mut violations = 0;
    for _ in 0..10_000 {
        let g = gold.choose(&mut rng).unwrap();
        let pred = random_prediction(&mut rng, g, &t);
        let s = score_detection(g, &pred, &t, Default::default()).unwrap();
        if let (Some(ta), Some(ga)) = (s.type_acc, s.group_acc) {
            if ga < ta {
                violations += 1;
            }
        }
    }
    check(
        not_one == 0 && violations == 0,
        format!("gold scores 1.0 on {pairs} pairs; group >= type on 10000 random predictions"),
        format!("{not_one} gold pairs below 1.0, {violations} group < type violations"),
    )
}

fn criterion_4() -> Outcome {
    let corpus = match etpc() {
        None => return Outcome::Skip("PT_ETPC not set; ETPC release absent".into()),
        Some(Err(e)) => return Outcome::Fail(format!("could not load ETPC: {e}")),
        Some(Ok(c)) => c,
    };
    let table = type_counts(&corpus);
    let rows: Vec<String> = reference_counts()
        .iter()
        .filter(|(name, n)| table.type_count(name) != *n)
        .map(|(name, n)| format!("{name} {} != {n}", table.type_count(name)))
        .collect();
    let alt = format!(
        "alternate tally: {} annotation records (published {REFERENCE_ALT_TOTAL}), {} pairs (published {REFERENCE_ALT_PAIRS})",
        table.raw_annotations, table.pairs
    );
    check(
        rows.is_empty() && table.total == REFERENCE_TOTAL,
        format!("total {} and all {} rows match; {alt}", table.total, reference_counts().len()),
        format!("total {} (published {REFERENCE_TOTAL}); {} rows differ: {}; {alt}", table.total, rows.len(), rows.join(", ")),
    )
}

fn rescale_identity(m: &analysis::CorrelationMatrix) -> Result<(f64, f64), String> {
    let z = analysis::rescale(m).map_err(|e| e.to_string())?;
    let vals: Vec<f64> = (0..z.labels.len())
        .flat_map(|i| (0..z.labels.len()).filter(move |j| *j != i).map(move |j| (i, j)))
        .filter_map(|(i, j)| z.rescaled.as_ref().unwrap_or(&z.raw)[i][j])
        .collect();
    let n = vals.len() as f64;
    let mu = vals.iter().sum::<f64>() / n;
    let sigma = (vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
    Ok((mu, sigma))
}

fn criterion_5() -> Outcome {
    let corpus = match etpc() {
        None => {
            let synth = synthetic_corpus(SynthConfig::new(3000, 5), tax());
            let note = analysis::correlation_matrix(&synth, &CorrelationOptions::default())
                .map_err(|e| e.to_string())
                .and_then(|m| rescale_identity(&m))
                .map(|(mu, s)| format!("rescale identity on a synthetic corpus: mu {mu:.1e}, sigma {s:.12}"))
                .unwrap_or_else(|e| format!("synthetic rescale check failed: {e}"));
            return Outcome::Skip(format!("PT_ETPC not set; ETPC release absent ({note})"));
        }
        Some(Err(e)) => return Outcome::Fail(format!("could not load ETPC: {e}")),
        Some(Ok(c)) => c,
    };
    let options = CorrelationOptions { jobs: 4, ..Default::default() };
    let m = match analysis::correlation_matrix(&corpus, &options) {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let Some(mean) = analysis::mean_off_diagonal(&m) else {
        return Outcome::Fail("no defined off-diagonal entries".into());
    };
    match rescale_identity(&m) {
        Ok((mu, sigma)) => check(
            (mean - 0.89).abs() <= 0.10 && mu.abs() < 1e-9 && (sigma - 1.0).abs() < 1e-9,
            format!("mean off-diagonal {mean:.4}; rescaled mu {mu:.1e}, sigma {sigma:.12}"),
            format!("mean off-diagonal {mean:.4} (target 0.89 +/- 0.10); rescaled mu {mu:.1e}, sigma {sigma:.12}"),
        ),
        Err(e) => Outcome::Fail(e),
    }
}

fn criterion_6() -> Outcome {
    let (corpus, source) = match etpc() {
        Some(Ok(c)) => (c, "ETPC"),
        _ => (synthetic_corpus(SynthConfig::new(10_000, 21), tax()), "synthetic 10000-pair corpus"),
    };
    let (train, test) = match split_balanced(&corpus, 0.7, 42) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let (train2, test2) = split_balanced(&corpus, 0.7, 42).expect("second split");
    let ids = |c: &Corpus| c.pairs.iter().map(|p| p.id.clone()).collect::<Vec<_>>();
    let deterministic = ids(&train) == ids(&train2) && ids(&test) == ids(&test2);
    let full = type_counts(&corpus);
    let tr = type_counts(&train);
    let mut worst = 0.0f64;
    let mut off = Vec::new();
    for (name, n) in &full.per_type {
        if *n == 0 {
            continue;
        }
        let dev = tr.type_count(name) as f64 - 0.7 * *n as f64;
        worst = worst.max(dev.abs());
        if dev.abs() > 1.0 {
            off.push(format!("{name} {}/{n}", tr.type_count(name)));
        }
    }
    check(
        deterministic && off.is_empty(),
        format!("{source}: max deviation {worst:.2} occurrences; repeated split identical"),
        format!("{source}: deterministic {deterministic}; {} types off: {}", off.len(), off.join(", ")),
    )
}

fn criterion_7() -> Outcome {
    let mut rates = Vec::new();
    let mut low = Vec::new();
    for name in common::SUPPORTED {
        let (hits, _, _) = common::recovery_rate(name, 500, 17);
        rates.push(format!("{name} {hits}/500"));
        if hits * 100 < 95 * 500 {
            low.push(name);
        }
    }
    check(low.is_empty(), rates.join(", "), format!("below 95%: {low:?}; {}", rates.join(", ")))
}

fn criterion_8() -> Outcome {
    let t = tax();
    let types: Vec<TypeId> = t.types().iter().map(|x| x.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for _ in 0..10_000 {
        let pair = common::random_annotated_pair(&mut rng, &types);
        let (l1, l2) = encode_token_labels(&pair);
        let d1 = decode_token_labels(&pair.s1.tokens, &l1, &t, Side::Source).unwrap();
        let d2 = decode_token_labels(&pair.s2.tokens, &l2, &t, Side::Target).unwrap();
        let set = |it: Vec<(TypeId, Span)>| it.into_iter().collect::<BTreeSet<_>>();
        let want1 = set(pair.annotations.iter().filter(|a| !a.span1.is_empty()).map(|a| (a.type_id, a.span1)).collect());
        let want2 = set(pair.annotations.iter().filter(|a| !a.span2.is_empty()).map(|a| (a.type_id, a.span2)).collect());
        let got1 = set(d1.iter().map(|a| (a.type_id, a.span1)).collect());
        let got2 = set(d2.iter().map(|a| (a.type_id, a.span2)).collect());
        if got1 != want1 || got2 != want2 {
            failures += 1;
        }
    }
    check(failures == 0, "10000 random annotation sets round-trip", format!("{failures} sets changed"))
}

fn answer_block(prompt: &str) -> &str {
    let start = prompt.find("Answer:\n").map(|i| i + "Answer:\n".len()).unwrap_or(0);
    let rest = &prompt[start..];
    &rest[..rest.find("\n\nSentence 1:").unwrap_or(rest.len())]
}

fn criterion_9() -> Outcome {
    let mut problems = Vec::new();

    // order and in-flight bound
    let mut slow = MockRule::new("", "echo {{prompt}}");
    slow.delay_ms = 40;
    let mock = MockEndpoint::start(vec![slow]).expect("mock");
    let mut config = GatewayConfig::new(mock.url());
    config.max_in_flight = 3;
    config.backoff_ms = 5;
    let transport = HttpTransport::new(&config).expect("transport");
    let prompts: Vec<String> = (0..10).map(|i| format!("prompt {i}")).collect();
    match run_batch(&transport, &config, &prompts) {
        Ok(items) => {
            let texts: Vec<Option<&str>> = items.iter().map(|i| i.text()).collect();
            let want: Vec<String> = prompts.iter().map(|p| format!("echo {p}")).collect();
            if texts != want.iter().map(|s| Some(s.as_str())).collect::<Vec<_>>() {
                problems.push("responses out of order".to_string());
            }
        }
        Err(e) => problems.push(format!("batch failed: {e}")),
    }
    let peak = mock.stats().peak_in_flight.load(Ordering::SeqCst);
    if peak > 3 {
        problems.push(format!("peak in-flight {peak} > 3"));
    }
    drop(mock);

    // retry semantics
    let mut flaky = MockRule::new("flaky", "fine");
    flaky.fail_times = 2;
    let mut broken = MockRule::new("broken", "never");
    broken.fail_times = u32::MAX;
    let mock = MockEndpoint::start(vec![flaky, broken]).expect("mock");
    let mut config = GatewayConfig::new(mock.url());
    config.backoff_ms = 5;
    config.retries = 3;
    let transport = HttpTransport::new(&config).expect("transport");
    match run_batch(&transport, &config, &["flaky".to_string()]) {
        Ok(items) if items[0].text() == Some("fine") && items[0].attempts == 3 => {}
        other => problems.push(format!("fail-twice case: {other:?}")),
    }
    config.retries = 1;
    match run_batch(&transport, &config, &["broken".to_string(), "other".to_string()]) {
        Ok(items) if items[0].result.is_err() && items[0].attempts == 2 && items[1].text() == Some("other") => {}
        other => problems.push(format!("always-failing case: {other:?}")),
    }
    drop(mock);

    // shot answer round trip through a built prompt
    let t = tax();
    let corpus = synthetic_corpus(SynthConfig::new(300, 9), Arc::clone(&t));
    let target = AnnotatedPair::new("target", "x y", "x z", true, vec![]);
    let mut mismatched = 0;
    for shot in &corpus.pairs {
        let prompt = build_detection_prompt(&PromptSpec::detection(&target, vec![shot.clone()]), &t).expect("prompt");
        let answer = answer_block(&prompt);
        let parsed = parse_detection_response(
            answer,
            &t,
            ResponseTarget { tokens1: &shot.s1.tokens, tokens2: &shot.s2.tokens },
        );
        let got: HashSet<SegmentAnnotation> = match parsed {
            Ok(p) => p.annotations().into_iter().collect(),
            Err(_) => HashSet::new(),
        };
        let want: HashSet<SegmentAnnotation> = shot.annotations.iter().cloned().collect();
        if got != want {
            mismatched += 1;
        }
    }
    if mismatched > 0 {
        problems.push(format!("{mismatched}/300 shot answers did not round-trip"));
    }
    check(
        problems.is_empty(),
        format!("order kept, peak in-flight {peak} <= 3, retries honoured, 300 shot answers round-trip"),
        problems.join("; "),
    )
}

fn main() {
    let criteria: Vec<(u32, &str, Duration, fn() -> Outcome)> = vec![
        (1, "metric oracle suite", Duration::from_secs(10), criterion_1),
        (2, "hand-computed fixtures", Duration::from_secs(1), criterion_2),
        (3, "scoring identities", Duration::from_secs(30), criterion_3),
        (4, "corpus verification", Duration::from_secs(60), criterion_4),
        (5, "correlation reproduction", Duration::from_secs(300), criterion_5),
        (6, "split protocol", Duration::from_secs(10), criterion_6),
        (7, "baseline round trip", Duration::from_secs(10), criterion_7),
        (8, "encode/decode round trip", Duration::from_secs(10), criterion_8),
        (9, "gateway contract", Duration::from_secs(5), criterion_9),
    ];
    let mut failed = 0;
    for (n, name, limit, f) in criteria {
        match timed(limit, f) {
            Outcome::Pass(d) => println!("criterion {n} ({name}): PASS - {d}"),
            Outcome::Skip(d) => println!("criterion {n} ({name}): SKIP - {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL - {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
