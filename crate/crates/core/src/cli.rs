//! The `paratype` command line.
//!
//! [`run`] parses arguments, dispatches to a subcommand and returns a
//! [`CommandResult`]; the binary only forwards its exit code. Reports go to
//! `--out` (or standard output), the one-line summary to standard output and
//! diagnostics to standard error. When the report itself is written to
//! standard output the summary moves to standard error so the stream stays
//! machine-readable.

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::align::TokenizerPolicy;
use crate::analysis::{self, AnalysisError, CorrelationOptions};
use crate::baseline::{detect_types, generate_typed, BaselineError, LexiconSet, TypedRequest};
use crate::corpus::{
    import_etpc_xml, import_tsv, read_jsonl_file, split_balanced, type_counts, verify_counts, write_jsonl_file,
    AnnotatedPair, Corpus, CorpusError, EtpcMapping,
};
use crate::gateway::{
    self, build_prompt, parse_detection_response, parse_generation_response, run_batch, GatewayConfig, GatewayError,
    HttpTransport, MockEndpoint, PromptSpec, ResponseTarget,
};
use crate::metrics::MetricName;
use crate::scoring::{
    aggregate_generation, evaluate_detection, read_generation_predictions, read_predictions, DetectionOptions,
    MatchMode, PredictedLabel, Prediction, PredictionRecord, ScoringError, Weighting,
};
use crate::span::Span;
use crate::taxonomy::{Taxonomy, TaxonomyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_REMOTE: i32 = 4;

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandResult {
    pub exit_code: i32,
    /// Files written by the command.
    pub outputs: Vec<PathBuf>,
    pub errors: Vec<String>,
    pub summary: String,
}

impl CommandResult {
    pub fn success(&self) -> bool {
        self.exit_code == EXIT_OK
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: m.into() }
    }
    fn invalid(m: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, message: m.into() }
    }
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let code = if matches!(e, CorpusError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

impl From<ScoringError> for Failure {
    fn from(e: ScoringError) -> Self {
        let code = if matches!(e, ScoringError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = if matches!(e, AnalysisError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

impl From<BaselineError> for Failure {
    fn from(e: BaselineError) -> Self {
        let code = if matches!(e, BaselineError::Io(_)) { EXIT_IO } else { EXIT_VALIDATION };
        Failure { code, message: e.to_string() }
    }
}

impl From<TaxonomyError> for Failure {
    fn from(e: TaxonomyError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        let code = match e {
            GatewayError::Prompt(_) | GatewayError::EmptyResponse => EXIT_VALIDATION,
            GatewayError::Config(_) => EXIT_USAGE,
            GatewayError::Io(_) => EXIT_IO,
            GatewayError::Unreachable { .. } | GatewayError::Mock(_) => EXIT_REMOTE,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    Proportional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Type,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Cooccur,
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Detect,
    Gen,
}

impl From<LevelArg> for analysis::Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Type => analysis::Level::Type,
            LevelArg::Group => analysis::Level::Group,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "paratype", version, about = "Typed paraphrase generation and detection evaluation")]
pub struct Cli {
    /// Output path (file, or directory for `split`); standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Worker threads for parallel steps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Taxonomy JSON replacing the built-in registry.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a JSONL corpus against the schema and the taxonomy.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Convert ETPC XML files (or a TSV corpus with --tsv) to JSONL.
    ImportEtpc {
        #[arg(long = "in", required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// JSON file overriding element and attribute names.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Inputs are `id, sentence1, sentence2, label` TSV files.
        #[arg(long)]
        tsv: bool,
    },
    /// Per-type and per-group occurrence counts.
    Counts {
        #[arg(long = "in")]
        input: PathBuf,
        /// Compare with the published counts; mismatches exit with 1.
        #[arg(long)]
        verify: bool,
    },
    /// Type-balanced train/test split written as train.jsonl and test.jsonl.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
    },
    /// Score detection predictions against gold annotations.
    EvalDetect {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        strict_span: bool,
        #[arg(long, value_enum, default_value = "uniform")]
        weighting: WeightingArg,
    },
    /// Score generated sentences segment by segment.
    EvalGen {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Type correlation matrix over segment metrics.
    Correlate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated metric names.
        #[arg(long, default_value = "wpd,ld")]
        metrics: String,
        #[arg(long, value_enum, default_value = "type")]
        level: LevelArg,
        #[arg(long, value_enum, default_value = "cooccur")]
        mode: ModeArg,
        #[arg(long, default_value_t = 5)]
        min_joint: usize,
        /// Report the z-scored matrix instead of the raw one.
        #[arg(long)]
        rescale: bool,
    },
    /// Rule-based type detection; writes prediction JSONL.
    BaselineDetect {
        #[arg(long = "in")]
        input: PathBuf,
        /// Lexicon TSV; the bundled demo lexicon when omitted.
        #[arg(long)]
        lexicons: Option<PathBuf>,
    },
    /// Rule-based typed generation from a request JSONL.
    BaselineGenerate {
        #[arg(long)]
        requests: PathBuf,
        #[arg(long)]
        lexicons: Option<PathBuf>,
    },
    /// Few-shot evaluation through a completion endpoint.
    GatewayEval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 0)]
        shots: usize,
        #[arg(long)]
        cot: bool,
        /// Corpus to draw examples from; otherwise the input is split and
        /// examples come from the training side.
        #[arg(long)]
        shots_from: Option<PathBuf>,
        /// Label set for detection prompts.
        #[arg(long, value_enum, default_value = "type")]
        level: LevelArg,
        /// Serve answers from a local mock scripted by this rules JSONL
        /// instead of PT_GATEWAY_URL.
        #[arg(long)]
        mock: Option<PathBuf>,
        /// Chat adapter JSON.
        #[arg(long)]
        adapter: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        #[arg(long)]
        max_in_flight: Option<usize>,
        /// Also write each raw model response to this JSONL file.
        #[arg(long)]
        responses: Option<PathBuf>,
    },
}

/// Parses `args` (without the program name) and runs the command.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("paratype")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return CommandResult {
                exit_code: code,
                errors: if code == EXIT_OK { vec![] } else { vec![e.kind().to_string()] },
                ..Default::default()
            };
        }
    };
    execute(&cli)
}

/// Runs an already parsed command line.
pub fn execute(cli: &Cli) -> CommandResult {
    let mut ctx = Ctx { cli, outputs: Vec::new(), summary_to_stderr: false };
    let outcome = dispatch(&mut ctx);
    let mut result = CommandResult { outputs: ctx.outputs, ..Default::default() };
    match outcome {
        Ok(summary) => {
            if ctx.summary_to_stderr {
                eprintln!("{summary}");
            } else {
                println!("{summary}");
            }
            result.summary = summary;
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            result.exit_code = f.code;
            result.summary = f.message.clone();
            result.errors.push(f.message);
        }
    }
    result
}

struct Ctx<'a> {
    cli: &'a Cli,
    outputs: Vec<PathBuf>,
    summary_to_stderr: bool,
}

impl Ctx<'_> {
    fn taxonomy(&self) -> Result<Arc<Taxonomy>, Failure> {
        match &self.cli.taxonomy {
            Some(p) => Ok(Arc::new(Taxonomy::load_file(p)?)),
            None => Ok(Arc::new(Taxonomy::default())),
        }
    }

    fn corpus(&self, path: &Path) -> Result<Corpus, Failure> {
        let tax = self.taxonomy()?;
        read_jsonl_file(path, tax).map_err(|e| match e {
            CorpusError::Io(io) => Failure::io(path, io),
            other => Failure::invalid(format!("{}: {other}", path.display())),
        })
    }

    fn lexicons(&self, path: Option<&Path>) -> Result<LexiconSet, Failure> {
        match path {
            Some(p) => LexiconSet::load(p).map_err(|e| match e {
                BaselineError::Io(io) => Failure::io(p, io),
                other => Failure::invalid(format!("{}: {other}", p.display())),
            }),
            None => Ok(LexiconSet::demo()),
        }
    }

    /// Writes `content` to `--out` or standard output.
    fn emit(&mut self, content: &str) -> Result<(), Failure> {
        match &self.cli.out {
            Some(p) => {
                std::fs::write(p, content).map_err(|e| Failure::io(p, e))?;
                self.outputs.push(p.clone());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())
                    .and_then(|_| if content.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
                    .map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
                self.summary_to_stderr = true;
            }
        }
        Ok(())
    }

    fn emit_lines<T: Serialize>(&mut self, records: &[T]) -> Result<(), Failure> {
        let mut text = String::new();
        for r in records {
            text.push_str(&serde_json::to_string(r).expect("serializable record"));
            text.push('\n');
        }
        self.emit(&text)
    }
}

fn dispatch(ctx: &mut Ctx<'_>) -> Result<String, Failure> {
    if ctx.cli.jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    match &ctx.cli.command {
        Command::Validate { input } => validate(ctx, input),
        Command::ImportEtpc { input, mapping, tsv } => import(ctx, input, mapping.as_deref(), *tsv),
        Command::Counts { input, verify } => counts(ctx, input, *verify),
        Command::Split { input, ratio } => split(ctx, input, *ratio),
        Command::EvalDetect { gold, pred, strict_span, weighting } => eval_detect(ctx, gold, pred, *strict_span, *weighting),
        Command::EvalGen { gold, pred } => eval_gen(ctx, gold, pred),
        Command::Correlate { input, metrics, level, mode, min_joint, rescale } => {
            correlate(ctx, input, metrics, *level, *mode, *min_joint, *rescale)
        }
        Command::BaselineDetect { input, lexicons } => baseline_detect(ctx, input, lexicons.as_deref()),
        Command::BaselineGenerate { requests, lexicons } => baseline_generate(ctx, requests, lexicons.as_deref()),
        Command::GatewayEval { .. } => gateway_eval(ctx),
    }
}

fn validate(ctx: &mut Ctx<'_>, input: &Path) -> Result<String, Failure> {
    let corpus = ctx.corpus(input)?;
    let typed = corpus.pairs.iter().filter(|p| p.is_typed()).count();
    Ok(format!("valid: {} pairs, {typed} typed", corpus.len()))
}

fn import(ctx: &mut Ctx<'_>, inputs: &[PathBuf], mapping: Option<&Path>, tsv: bool) -> Result<String, Failure> {
    let tax = ctx.taxonomy()?;
    let mapping = match mapping {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            serde_json::from_str::<EtpcMapping>(&text).map_err(|e| Failure::invalid(format!("{}: {e}", p.display())))?
        }
        None => EtpcMapping::default(),
    };
    let (corpus, note) = if tsv {
        let mut pairs = Vec::new();
        for p in inputs {
            let f = File::open(p).map_err(|e| Failure::io(p, e))?;
            pairs.extend(import_tsv(f, Arc::clone(&tax), "tsv")?.pairs);
        }
        (Corpus::new("tsv", pairs, Arc::clone(&tax))?, String::new())
    } else {
        let imported = import_etpc_xml(inputs, &mapping, Arc::clone(&tax))?;
        for s in &imported.skipped {
            eprintln!("skipped pair {} in {}: {}", s.id, s.file, s.reason);
        }
        let note = format!(
            ", {} skipped, {} unregistered annotations dropped",
            imported.skipped.len(),
            imported.unregistered_annotations
        );
        (imported.corpus, note)
    };
    let out = ctx.cli.out.clone().ok_or_else(|| Failure::usage("import-etpc needs --out"))?;
    write_jsonl_file(&corpus, &out)?;
    ctx.outputs.push(out.clone());
    Ok(format!("imported {} pairs{note} into {}", corpus.len(), out.display()))
}

fn counts(ctx: &mut Ctx<'_>, input: &Path, verify: bool) -> Result<String, Failure> {
    let corpus = ctx.corpus(input)?;
    let table = type_counts(&corpus);
    let checks = verify.then(|| verify_counts(&table));
    let text = match ctx.cli.format {
        Format::Json => {
            let mut v = serde_json::to_value(&table).expect("serializable table");
            if let Some(c) = &checks {
                v["verification"] = serde_json::to_value(c).expect("serializable checks");
            }
            serde_json::to_string_pretty(&v).expect("json")
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::invalid(e.to_string());
            w.write_record(["kind", "name", "count", "expected"]).map_err(csv_err)?;
            let expected: HashMap<&str, u64> = checks
                .iter()
                .flatten()
                .map(|c| (c.name.as_str(), c.expected))
                .collect();
            let exp = |n: &str| expected.get(n).map(u64::to_string).unwrap_or_default();
            for (name, n) in &table.per_type {
                w.write_record(["type", name, &n.to_string(), &exp(name)]).map_err(csv_err)?;
            }
            for (name, n) in &table.per_group {
                w.write_record(["group", name, &n.to_string(), ""]).map_err(csv_err)?;
            }
            for (name, n) in [
                ("total", table.total),
                ("raw_annotations", table.raw_annotations),
                ("pairs", table.pairs),
                ("annotated_pairs", table.annotated_pairs),
            ] {
                w.write_record(["tally", name, &n.to_string(), ""]).map_err(csv_err)?;
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
        }
    };
    ctx.emit(&text)?;
    let summary = format!("{} occurrences over {} pairs", table.total, table.pairs);
    match checks {
        Some(c) => {
            let bad: Vec<String> = c
                .iter()
                .filter(|c| !c.ok())
                .map(|c| format!("{} expected {} got {}", c.name, c.expected, c.actual))
                .collect();
            if bad.is_empty() {
                Ok(format!("{summary}; all {} checks match", c.len()))
            } else {
                for b in &bad {
                    eprintln!("mismatch: {b}");
                }
                Err(Failure::invalid(format!("{summary}; {} of {} checks differ", bad.len(), c.len())))
            }
        }
        None => Ok(summary),
    }
}

fn split(ctx: &mut Ctx<'_>, input: &Path, ratio: f64) -> Result<String, Failure> {
    let corpus = ctx.corpus(input)?;
    let (train, test) = split_balanced(&corpus, ratio, ctx.cli.seed)?;
    let dir = ctx.cli.out.clone().ok_or_else(|| Failure::usage("split needs --out <directory>"))?;
    std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    for (name, c) in [("train.jsonl", &train), ("test.jsonl", &test)] {
        let p = dir.join(name);
        write_jsonl_file(c, &p)?;
        ctx.outputs.push(p);
    }
    Ok(format!("split {} pairs into {} train and {} test", corpus.len(), train.len(), test.len()))
}

fn eval_detect(
    ctx: &mut Ctx<'_>,
    gold: &Path,
    pred: &Path,
    strict_span: bool,
    weighting: WeightingArg,
) -> Result<String, Failure> {
    let corpus = ctx.corpus(gold)?;
    let preds = read_predictions(pred, &corpus.taxonomy).map_err(|e| match e {
        ScoringError::Io(io) => Failure::io(pred, io),
        other => Failure::invalid(format!("{}: {other}", pred.display())),
    })?;
    let options = DetectionOptions {
        weighting: match weighting {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Proportional => Weighting::Proportional,
        },
        mode: if strict_span { MatchMode::StrictSpan } else { MatchMode::LocationFree },
    };
    let (_, report) = evaluate_detection(&corpus, &preds, options)?;
    let text = match ctx.cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    ctx.emit(&text)?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    Ok(format!(
        "{} pairs: binary {:.4}, type {}, group {}",
        report.pairs,
        report.binary_accuracy,
        fmt(report.type_acc),
        fmt(report.group_acc)
    ))
}

fn eval_gen(ctx: &mut Ctx<'_>, gold: &Path, pred: &Path) -> Result<String, Failure> {
    let corpus = ctx.corpus(gold)?;
    let generated = read_generation_predictions(pred).map_err(|e| match e {
        ScoringError::Io(io) => Failure::io(pred, io),
        other => Failure::invalid(format!("{}: {other}", pred.display())),
    })?;
    let (_, report) = aggregate_generation(&corpus, &generated, &TokenizerPolicy::METRIC)?;
    emit_generation_report(ctx, &report)
}

fn emit_generation_report(ctx: &mut Ctx<'_>, report: &crate::scoring::GenerationReport) -> Result<String, Failure> {
    let text = match ctx.cli.format {
        Format::Json => serde_json::to_string_pretty(report).expect("json"),
        Format::Csv => {
            let mut s = String::from("scope,bleu,rouge1_f1,rouge2_f1,rougeL_f1\n");
            let mut row = |scope: &str, p: &crate::scoring::PooledScores| {
                s.push_str(&format!("\"{scope}\",{},{},{},{}\n", p.bleu, p.rouge1.f1, p.rouge2.f1, p.rouge_l.f1));
            };
            if let Some(p) = &report.pooled {
                row("all", p);
            }
            for (name, p) in &report.per_type {
                row(name, p);
            }
            s
        }
    };
    ctx.emit(&text)?;
    Ok(match &report.pooled {
        Some(p) => format!(
            "{} pairs, {} segments ({} skipped): BLEU {:.4}, ROUGE-L {:.4}",
            report.pairs, report.segments, report.skipped_segments, p.bleu, p.rouge_l.f1
        ),
        None => format!("{} pairs, no scorable segments", report.pairs),
    })
}

fn correlate(
    ctx: &mut Ctx<'_>,
    input: &Path,
    metrics: &str,
    level: LevelArg,
    mode: ModeArg,
    min_joint: usize,
    rescale: bool,
) -> Result<String, Failure> {
    let metrics = metrics
        .split(',')
        .filter(|m| !m.trim().is_empty())
        .map(|m| m.parse::<MetricName>().map_err(|e| Failure::usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = ctx.corpus(input)?;
    let options = CorrelationOptions {
        metrics,
        level: level.into(),
        mode: match mode {
            ModeArg::Cooccur => analysis::Mode::Cooccur,
            ModeArg::Profile => analysis::Mode::Profile,
        },
        min_joint,
        jobs: ctx.cli.jobs,
    };
    let raw = analysis::correlation_matrix(&corpus, &options)?;
    let mean = analysis::mean_off_diagonal(&raw);
    let matrix = if rescale { analysis::rescale(&raw)? } else { raw };
    let text = match ctx.cli.format {
        Format::Json => matrix.to_json(),
        Format::Csv => matrix.to_csv(),
    };
    ctx.emit(&text)?;
    Ok(format!(
        "{} labels, mean off-diagonal raw correlation {}",
        matrix.labels.len(),
        mean.map_or("undefined".to_string(), |m| format!("{m:.4}"))
    ))
}

fn baseline_detect(ctx: &mut Ctx<'_>, input: &Path, lexicons: Option<&Path>) -> Result<String, Failure> {
    let corpus = ctx.corpus(input)?;
    let lex = ctx.lexicons(lexicons)?;
    let tax = &corpus.taxonomy;
    let records: Vec<PredictionRecord> = corpus
        .pairs
        .iter()
        .map(|p| {
            let labels = detect_types(&p.s1.tokens, &p.s2.tokens, &lex, tax)
                .iter()
                .map(PredictedLabel::from)
                .collect();
            PredictionRecord::from_prediction(p.id.clone(), &Prediction::from_labels(labels, tax), tax)
        })
        .collect();
    let labels: usize = records.iter().map(|r| r.annotations.len()).sum();
    ctx.emit_lines(&records)?;
    Ok(format!("detected {labels} typed segments over {} pairs", records.len()))
}

/// One line of a `baseline-generate` request file.
#[derive(Debug, Clone, Deserialize)]
pub struct GenerateInput {
    pub id: String,
    pub source: String,
    pub requests: Vec<GenerateRequestInput>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GenerateRequestInput {
    pub span: Span,
    /// Type name or numeric id.
    #[serde(rename = "type")]
    pub type_key: Value,
}

#[derive(Debug, Clone, Serialize)]
struct GenerateOutput {
    id: String,
    generated: String,
    source_tokens: Vec<String>,
    tokens: Vec<String>,
    annotations: Vec<crate::corpus::SegmentAnnotation>,
    skipped: Vec<crate::baseline::SkippedRequest>,
}

fn baseline_generate(ctx: &mut Ctx<'_>, requests: &Path, lexicons: Option<&Path>) -> Result<String, Failure> {
    let tax = ctx.taxonomy()?;
    let lex = ctx.lexicons(lexicons)?;
    let file = File::open(requests).map_err(|e| Failure::io(requests, e))?;
    let mut outputs = Vec::new();
    let mut skipped = 0;
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Failure::io(requests, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |m: String| Failure::invalid(format!("{} line {}: {m}", requests.display(), k + 1));
        let input: GenerateInput = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        let typed = input
            .requests
            .iter()
            .map(|r| {
                let t = match &r.type_key {
                    Value::String(name) => tax.lookup(name.as_str()),
                    Value::Number(n) => tax.lookup(n.as_u64().unwrap_or(0) as u16),
                    other => return Err(at(format!("type must be a name or id, got {other}"))),
                };
                t.map(|t| TypedRequest { span: r.span, type_id: t.id }).map_err(|e| at(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let source = crate::align::tokenize(&input.source, &TokenizerPolicy::ALIGNMENT);
        let g = generate_typed(&source, &typed, &lex, &tax, ctx.cli.seed).map_err(|e| at(e.to_string()))?;
        for s in &g.skipped {
            eprintln!("{}: skipped request at {}: {}", input.id, s.request.span, s.reason);
        }
        skipped += g.skipped.len();
        outputs.push(GenerateOutput {
            id: input.id,
            generated: g.text,
            source_tokens: source,
            tokens: g.tokens,
            annotations: g.annotations,
            skipped: g.skipped,
        });
    }
    ctx.emit_lines(&outputs)?;
    Ok(format!("generated {} sentences, {skipped} requests skipped", outputs.len()))
}

/// Picks `k` example pairs deterministically. Generation examples must carry
/// at least one request.
fn pick_shots(pool: &Corpus, k: usize, task: TaskArg, seed: u64) -> Vec<AnnotatedPair> {
    let mut candidates: Vec<&AnnotatedPair> = pool
        .pairs
        .iter()
        .filter(|p| match task {
            TaskArg::Detect => p.is_typed() || !p.is_paraphrase,
            TaskArg::Gen => !gateway::requests_of(p).is_empty(),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    candidates.into_iter().take(k).cloned().collect()
}

fn gateway_eval(ctx: &mut Ctx<'_>) -> Result<String, Failure> {
    let Command::GatewayEval {
        input,
        task,
        shots,
        cot,
        shots_from,
        level,
        mock,
        adapter,
        retries,
        max_in_flight,
        responses,
    } = &ctx.cli.command
    else {
        unreachable!("dispatched on GatewayEval")
    };
    let corpus = ctx.corpus(input)?;
    let (pool, eval) = match shots_from {
        Some(p) => {
            let pool = ctx.corpus(p)?;
            let ids: HashSet<&str> = pool.pairs.iter().map(|q| q.id.as_str()).collect();
            let texts: HashSet<(&str, &str)> = pool.pairs.iter().map(|q| (q.s1.raw.as_str(), q.s2.raw.as_str())).collect();
            if let Some(clash) = corpus
                .pairs
                .iter()
                .find(|q| ids.contains(q.id.as_str()) || texts.contains(&(q.s1.raw.as_str(), q.s2.raw.as_str())))
            {
                return Err(Failure::invalid(format!("example corpus overlaps the evaluation pairs at {}", clash.id)));
            }
            (pool, corpus)
        }
        None if *shots == 0 => (corpus.with_pairs("empty", Vec::new()), corpus),
        None => split_balanced(&corpus, 0.7, ctx.cli.seed)?,
    };
    let examples = pick_shots(&pool, *shots, *task, ctx.cli.seed);
    if examples.len() < *shots {
        eprintln!("only {} usable examples available, asked for {shots}", examples.len());
    }

    let tax = Arc::clone(&eval.taxonomy);
    let targets: Vec<&AnnotatedPair> = eval
        .pairs
        .iter()
        .filter(|p| matches!(task, TaskArg::Detect) || !gateway::requests_of(p).is_empty())
        .collect();
    let prompts = targets
        .iter()
        .map(|p| {
            let mut spec = match task {
                TaskArg::Detect => PromptSpec::detection(p, examples.clone()),
                TaskArg::Gen => PromptSpec::generation(p, examples.clone()),
            };
            spec.chain_of_thought = *cot;
            spec.level = (*level).into();
            build_prompt(&spec, &tax)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (mock_server, mut config) = match mock {
        Some(rules) => {
            let server = MockEndpoint::start(gateway::load_mock_rules(rules)?)?;
            let config = GatewayConfig::new(server.url());
            (Some(server), config)
        }
        None => (None, GatewayConfig::from_env()?),
    };
    config.retries = *retries;
    config.max_in_flight = max_in_flight.unwrap_or(ctx.cli.jobs.max(1));
    if let Some(a) = adapter {
        config.adapter = Some(gateway::ChatAdapter::load(a)?);
    }
    let transport = HttpTransport::new(&config)?;
    let items = run_batch(&transport, &config, &prompts)?;
    drop(mock_server);

    if let Some(path) = responses {
        let mut text = String::new();
        for (p, item) in targets.iter().zip(&items) {
            let line = match &item.result {
                Ok(t) => json!({"id": p.id, "attempts": item.attempts, "response": t}),
                Err(e) => json!({"id": p.id, "attempts": item.attempts, "error": e.to_string()}),
            };
            text.push_str(&line.to_string());
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Failure::io(path, e))?;
        ctx.outputs.push(path.clone());
    }

    let failed = items.iter().filter(|i| i.result.is_err()).count();
    let mut unparsed_lines = 0;
    let summary = match task {
        TaskArg::Detect => {
            let mut preds = HashMap::new();
            for (p, item) in targets.iter().zip(&items) {
                let parsed = item.text().map(|t| {
                    parse_detection_response(t, &tax, ResponseTarget { tokens1: &p.s1.tokens, tokens2: &p.s2.tokens })
                });
                let pred = match parsed {
                    Some(Ok(d)) => {
                        unparsed_lines += d.unparsed.len();
                        d.into_prediction()
                    }
                    Some(Err(e)) => {
                        eprintln!("{}: {e}", p.id);
                        Prediction { is_paraphrase: true, labels: vec![] }
                    }
                    None => Prediction { is_paraphrase: true, labels: vec![] },
                };
                preds.insert(p.id.clone(), pred);
            }
            let (_, report) = evaluate_detection(&eval, &preds, DetectionOptions::default())?;
            let text = match ctx.cli.format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            ctx.emit(&text)?;
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            format!(
                "{} pairs: binary {:.4}, type {}, group {}",
                report.pairs,
                report.binary_accuracy,
                fmt(report.type_acc),
                fmt(report.group_acc)
            )
        }
        TaskArg::Gen => {
            let mut generated = HashMap::new();
            for ((p, item), prompt) in targets.iter().zip(&items).zip(&prompts) {
                let sentence = item.text().map(|t| parse_generation_response(t, Some(prompt)));
                match sentence {
                    Some(Ok(s)) => {
                        generated.insert(p.id.clone(), s);
                    }
                    Some(Err(e)) => eprintln!("{}: {e}", p.id),
                    None => {}
                }
            }
            let answered: Vec<AnnotatedPair> = targets
                .iter()
                .filter(|p| generated.contains_key(&p.id))
                .map(|p| (*p).clone())
                .collect();
            let scored = eval.with_pairs(format!("{}-answered", eval.name), answered);
            let (_, report) = aggregate_generation(&scored, &generated, &TokenizerPolicy::METRIC)?;
            emit_generation_report(ctx, &report)?
        }
    };
    Ok(format!(
        "{summary}; {} requests, {failed} failed, {unparsed_lines} unparsed lines",
        items.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(["bogus"]).exit_code, EXIT_USAGE);
        assert_eq!(run(Vec::<String>::new()).exit_code, EXIT_USAGE);
    }

    #[test]
    fn missing_file_is_io_error() {
        let r = run(["validate", "--in", "/nonexistent/x.jsonl"]);
        assert_eq!(r.exit_code, EXIT_IO, "{r:?}");
    }

    #[test]
    fn help_is_success() {
        assert_eq!(run(["--help"]).exit_code, EXIT_OK);
    }
}
