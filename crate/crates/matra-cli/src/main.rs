//! `matra` — the evaluation pipeline as scriptable stages: corpus
//! statistics, feature extraction, training, scoring, and report
//! generation, with inspectable artifact files between every stage.
//!
//! Each subcommand is a thin composition of library calls. Settings
//! come from flags, optionally backed by a flat `key = value` config
//! file (flags win). Diagnostics go to standard error; data only ever
//! goes to the declared output files. Exit codes: 0 success, 1
//! computational failure (degenerate statistics, numeric blow-ups),
//! 2 usage or I/O problems.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ConfigMap;
use matra_core::basemetrics::{bleu_sentence, chrf, lepor_basic, meteor_lite, metric_names};
use matra_core::corpus::{
    heval_target, load_corpus, load_human_scores, load_metric_scores, save_metric_scores,
    CorpusFormat, MetricScore,
};
use matra_core::evalharness::{
    correlate_with_human, emit_correlation_report, emit_system_report, system_average,
    ReportFormat,
};
use matra_core::features::{
    extract, read_feature_file, write_feature_file, FeatureRow, QuartileSide, ResourcePaths,
    Resources, FEATURE_COUNT,
};
use matra_core::lexstats::{build_statistics, lm_train, StatsArtifact};
use matra_core::neural::{train, write_trace, ModelConfig, TrainHyper, TrainedModel};
use matra_core::text::{tokenize, StemRules, TokenSequence};
use matra_core::{MatraError, Result};

/// Additive smoothing constant `stats` uses unless `--lm-k` says
/// otherwise.
const DEFAULT_LM_K: f64 = 0.1;

#[derive(Parser)]
#[command(
    name = "matra",
    version,
    about = "Trainable machine-translation evaluation: features, regressors, reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the n-gram statistics + language-model artifact
    Stats(StatsArgs),
    /// Extract every segment's 24 features into a TSV
    Extract(ExtractArgs),
    /// Train a regressor on an extracted feature file
    Train(TrainArgs),
    /// Score a corpus with a trained model
    Score(ScoreArgs),
    /// Build system-score and human-correlation reports
    Evaluate(EvaluateArgs),
    /// Score a corpus with the built-in baseline metrics
    Baselines(BaselinesArgs),
}

/// Flags naming the shared feature-extraction resources. Only the
/// statistics artifact is mandatory; the rest degrade to neutral
/// defaults when omitted.
#[derive(Args, Debug, Default)]
struct ResourceArgs {
    /// Statistics + language-model artifact from `matra stats`
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Word vectors in textual word2vec format
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    /// Per-segment sentence embeddings (JSONL)
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Let averaged word vectors stand in for missing embeddings
    #[arg(long)]
    embedding_fallback: bool,
    /// Source-language stopwords, one per line
    #[arg(long)]
    stopwords_src: Option<PathBuf>,
    /// Target-language stopwords, one per line
    #[arg(long)]
    stopwords_tgt: Option<PathBuf>,
    /// Suffix-stripping rules TSV
    #[arg(long)]
    stem_rules: Option<PathBuf>,
    /// Word → POS tag lexicon TSV
    #[arg(long)]
    pos_lexicon: Option<PathBuf>,
    /// Side the frequency-quartile features read: candidate or source
    #[arg(long)]
    quartile_side: Option<String>,
}

/// Config keys accepted wherever [`ResourceArgs`] is.
const RESOURCE_KEYS: [&str; 9] = [
    "stats",
    "word-vectors",
    "embeddings",
    "embedding-fallback",
    "stopwords-src",
    "stopwords-tgt",
    "stem-rules",
    "pos-lexicon",
    "quartile-side",
];

#[derive(Args)]
struct StatsArgs {
    /// Training corpus: plain text, one sentence per line
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Additive smoothing constant of the trigram language model
    #[arg(long)]
    lm_k: Option<f64>,
    /// Artifact file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Evaluation corpus (TSV, or JSONL by extension)
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Human judgments (JSONL); adds the target column for training
    #[arg(long)]
    human: Option<PathBuf>,
    /// Feature TSV to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature TSV with a target column (extract --human)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Architecture preset: matra1 or matra2 [default: matra1]
    #[arg(long)]
    preset: Option<String>,
    /// Input width; feature files require the full 24
    #[arg(long)]
    input_dim: Option<usize>,
    /// Training epochs [default: 500]
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Dropout rate after each hidden activation [default: 0.2]
    #[arg(long)]
    dropout: Option<f64>,
    /// L1 penalty on dense weights [default: 1e-5]
    #[arg(long)]
    l1: Option<f64>,
    /// Adam learning rate [default: 1e-3]
    #[arg(long)]
    lr: Option<f64>,
    /// Seed for initialization, splits, shuffles and dropout [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Insert batch normalization before each hidden tanh
    #[arg(long)]
    batch_norm: bool,
    /// Fraction of rows held out for validation [default: 0.1]
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Model file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-epoch loss trace TSV here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Evaluation corpus (TSV, or JSONL by extension)
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Trained model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Metric name written to the score file [default: by architecture]
    #[arg(long)]
    metric_name: Option<String>,
    /// Score TSV to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Evaluation corpus (TSV, or JSONL by extension)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Human judgments (JSONL)
    #[arg(long)]
    human: Option<PathBuf>,
    /// Score TSVs to evaluate (repeatable)
    #[arg(long)]
    scores: Vec<PathBuf>,
    /// One pooled correlation row instead of one per system
    #[arg(long)]
    pooled: bool,
    /// Directory receiving the four report files
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BaselinesArgs {
    /// Evaluation corpus (TSV, or JSONL by extension)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Suffix-stripping rules for METEOR-lite's stem stage
    #[arg(long)]
    stem_rules: Option<PathBuf>,
    /// Comma-separated subset of bleu,chrf,meteor,lepor [default: all]
    #[arg(long)]
    metrics: Option<String>,
    /// Score TSV to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key = value config file; flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("matra: {e}");
            ExitCode::from(if e.is_computational() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Stats(args) => cmd_stats(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Score(args) => cmd_score(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Baselines(args) => cmd_baselines(args),
    }
}

/// Corpus files are JSONL when the extension says so, TSV otherwise.
fn corpus_format(path: &Path) -> CorpusFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") => {
            CorpusFormat::Jsonl
        }
        _ => CorpusFormat::Tsv,
    }
}

/// Tokenize a plain-text sentence file, skipping blank lines.
fn read_sentence_file(path: &Path) -> Result<Vec<TokenSequence>> {
    let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
    let sentences: Vec<TokenSequence> = content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(tokenize)
        .collect();
    if sentences.is_empty() {
        return Err(MatraError::invalid(format!(
            "{}: no sentences (file is empty or all blank lines)",
            path.display()
        )));
    }
    Ok(sentences)
}

/// Merge resource flags with the config file into library paths.
fn resolve_resources(args: ResourceArgs, cfg: &ConfigMap) -> Result<ResourcePaths> {
    let quartile_side = match cfg.string(args.quartile_side, "quartile-side") {
        None => QuartileSide::Candidate,
        Some(side) => match side.as_str() {
            "candidate" => QuartileSide::Candidate,
            "source" => QuartileSide::Source,
            other => {
                return Err(MatraError::invalid(format!(
                    "--quartile-side must be candidate or source, got {other:?}"
                )))
            }
        },
    };
    Ok(ResourcePaths {
        stats_artifact: cfg.required_path(args.stats, "stats")?,
        word_vectors: cfg.path(args.word_vectors, "word-vectors"),
        embeddings: cfg.path(args.embeddings, "embeddings"),
        embedding_fallback: cfg.switch(args.embedding_fallback, "embedding-fallback")?,
        stopwords_source: cfg.path(args.stopwords_src, "stopwords-src"),
        stopwords_target: cfg.path(args.stopwords_tgt, "stopwords-tgt"),
        stem_rules: cfg.path(args.stem_rules, "stem-rules"),
        pos_lexicon: cfg.path(args.pos_lexicon, "pos-lexicon"),
        quartile_side,
    })
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    cfg.check_keys(&["corpus", "lm-k", "out"])?;
    let corpus = cfg.required_path(args.corpus, "corpus")?;
    let out = cfg.required_path(args.out, "out")?;
    let k = cfg.parse(args.lm_k, "lm-k")?.unwrap_or(DEFAULT_LM_K);

    let sentences = read_sentence_file(&corpus)?;
    let statistics = build_statistics(&sentences)?;
    let language_model = lm_train(&sentences, k)?;
    StatsArtifact::new(statistics, language_model).save(&out)
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    let mut keys = vec!["corpus", "human", "out"];
    keys.extend(RESOURCE_KEYS);
    cfg.check_keys(&keys)?;
    let corpus_path = cfg.required_path(args.corpus, "corpus")?;
    let out = cfg.required_path(args.out, "out")?;
    let human_path = cfg.path(args.human, "human");
    let paths = resolve_resources(args.resources, &cfg)?;

    let resources = Resources::load(&paths)?;
    let segments = load_corpus(&corpus_path, corpus_format(&corpus_path))?;
    let human = human_path.map(|p| load_human_scores(&p)).transpose()?;

    let mut rows = Vec::with_capacity(segments.len());
    for segment in &segments {
        let features = extract(segment, &resources)?;
        let target = match &human {
            None => None,
            Some(records) => {
                let record = records.get(&segment.segment_id).ok_or_else(|| {
                    MatraError::invalid(format!(
                        "segment {:?} has no record in the human-judgment file",
                        segment.segment_id
                    ))
                })?;
                Some(heval_target(record))
            }
        };
        rows.push(FeatureRow {
            segment_id: segment.segment_id.clone(),
            system_id: segment.system_id.clone(),
            features,
            target,
        });
    }
    write_feature_file(&rows, &out)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    cfg.check_keys(&[
        "features",
        "preset",
        "input-dim",
        "epochs",
        "batch-size",
        "dropout",
        "l1",
        "lr",
        "seed",
        "batch-norm",
        "validation-fraction",
        "out",
        "trace",
    ])?;
    let features_path = cfg.required_path(args.features, "features")?;
    let out = cfg.required_path(args.out, "out")?;
    let trace_path = cfg.path(args.trace, "trace");

    let preset = cfg
        .string(args.preset, "preset")
        .unwrap_or_else(|| "matra1".to_string());
    let mut model_config = ModelConfig::preset(&preset)?;
    if let Some(dim) = cfg.parse(args.input_dim, "input-dim")? {
        model_config.input_dim = dim;
    }
    if let Some(rate) = cfg.parse(args.dropout, "dropout")? {
        model_config.dropout_rate = rate;
    }
    if let Some(lambda) = cfg.parse(args.l1, "l1")? {
        model_config.l1_lambda = lambda;
    }
    if let Some(seed) = cfg.parse(args.seed, "seed")? {
        model_config.seed = seed;
    }
    model_config.use_batch_norm = cfg.switch(args.batch_norm, "batch-norm")?;

    let mut hyper = TrainHyper::default();
    if let Some(epochs) = cfg.parse(args.epochs, "epochs")? {
        hyper.epochs = epochs;
    }
    if let Some(batch) = cfg.parse(args.batch_size, "batch-size")? {
        hyper.batch_size = batch;
    }
    if let Some(lr) = cfg.parse(args.lr, "lr")? {
        hyper.learning_rate = lr;
    }
    if let Some(fraction) = cfg.parse(args.validation_fraction, "validation-fraction")? {
        hyper.validation_fraction = fraction;
    }

    if model_config.input_dim != FEATURE_COUNT {
        return Err(MatraError::invalid(format!(
            "feature files carry {FEATURE_COUNT} features; cannot train with --input-dim {}",
            model_config.input_dim
        )));
    }
    let rows = read_feature_file(&features_path)?;
    let mut inputs = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for row in &rows {
        let target = row.target.ok_or_else(|| {
            MatraError::invalid(format!(
                "{}: no target column; extract with --human to train",
                features_path.display()
            ))
        })?;
        inputs.push(row.features.as_array().to_vec());
        targets.push(target);
    }

    let outcome = train(&model_config, &inputs, &targets, &hyper)?;
    if let Some(path) = &trace_path {
        write_trace(&outcome.trace, path)?;
    }
    TrainedModel::new(model_config, outcome.params, outcome.normalization)?.save(&out)
}

/// Models with a preset architecture score under that preset's metric
/// name; anything else is plain "MaTrA".
fn default_metric_name(config: &ModelConfig) -> &'static str {
    if config.hidden_widths == ModelConfig::matra1().hidden_widths {
        metric_names::MATRA1
    } else if config.hidden_widths == ModelConfig::matra2().hidden_widths {
        metric_names::MATRA2
    } else {
        "MaTrA"
    }
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    let mut keys = vec!["corpus", "model", "metric-name", "out"];
    keys.extend(RESOURCE_KEYS);
    cfg.check_keys(&keys)?;
    let corpus_path = cfg.required_path(args.corpus, "corpus")?;
    let model_path = cfg.required_path(args.model, "model")?;
    let out = cfg.required_path(args.out, "out")?;
    let paths = resolve_resources(args.resources, &cfg)?;

    let resources = Resources::load(&paths)?;
    let segments = load_corpus(&corpus_path, corpus_format(&corpus_path))?;
    let model = TrainedModel::load(&model_path)?;
    let metric_name = cfg
        .string(args.metric_name, "metric-name")
        .unwrap_or_else(|| default_metric_name(&model.config).to_string());

    let mut scores = Vec::with_capacity(segments.len());
    for segment in &segments {
        let features = extract(segment, &resources)?;
        scores.push(MetricScore {
            segment_id: segment.segment_id.clone(),
            metric_name: metric_name.clone(),
            value: model.predict(&features)?,
        });
    }
    save_metric_scores(&scores, &out)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    cfg.check_keys(&["corpus", "human", "scores", "pooled", "out-dir"])?;
    let corpus_path = cfg.required_path(args.corpus, "corpus")?;
    let human_path = cfg.required_path(args.human, "human")?;
    let out_dir = cfg.required_path(args.out_dir, "out-dir")?;
    let pooled = cfg.switch(args.pooled, "pooled")?;
    let score_paths = cfg.paths(args.scores, "scores");
    if score_paths.is_empty() {
        return Err(MatraError::invalid(
            "missing --scores (repeatable flag, or comma-separated config key)",
        ));
    }

    let segments = load_corpus(&corpus_path, corpus_format(&corpus_path))?;
    let human: BTreeMap<String, f64> = load_human_scores(&human_path)?
        .iter()
        .map(|(id, record)| (id.clone(), heval_target(record)))
        .collect();
    let mut scores = Vec::new();
    for path in &score_paths {
        scores.extend(load_metric_scores(path)?);
    }

    std::fs::create_dir_all(&out_dir).map_err(|e| MatraError::io(&out_dir, e))?;
    let averages = system_average(&scores, &segments)?;
    emit_system_report(&averages, ReportFormat::Tsv, &out_dir.join("system_scores.tsv"))?;
    emit_system_report(&averages, ReportFormat::Json, &out_dir.join("system_scores.json"))?;
    let correlations = correlate_with_human(&scores, &human, &segments, !pooled)?;
    emit_correlation_report(
        &correlations,
        ReportFormat::Tsv,
        &out_dir.join("correlations.tsv"),
    )?;
    emit_correlation_report(
        &correlations,
        ReportFormat::Json,
        &out_dir.join("correlations.json"),
    )?;

    // Constant metrics must be visible: the reports flag the cells, and
    // the run as a whole fails computationally.
    let mut degenerate: Vec<String> = correlations
        .rows
        .iter()
        .flat_map(|(system, cells)| {
            cells
                .iter()
                .filter(|(_, cell)| cell.degenerate)
                .map(move |(metric, _)| format!("{system}/{metric}"))
        })
        .collect();
    degenerate.sort();
    if !degenerate.is_empty() {
        return Err(MatraError::ZeroVariance {
            context: format!(
                "{} correlation cell(s): {} (reports written with the cells flagged)",
                degenerate.len(),
                degenerate.join(", ")
            ),
        });
    }
    Ok(())
}

fn cmd_baselines(args: BaselinesArgs) -> Result<()> {
    let cfg = ConfigMap::load_optional(args.config.as_ref())?;
    cfg.check_keys(&["corpus", "stem-rules", "metrics", "out"])?;
    let corpus_path = cfg.required_path(args.corpus, "corpus")?;
    let out = cfg.required_path(args.out, "out")?;
    let stem_rules = match cfg.path(args.stem_rules, "stem-rules") {
        Some(path) => StemRules::load(&path)?,
        None => StemRules::empty(),
    };

    let selected = cfg
        .string(args.metrics, "metrics")
        .unwrap_or_else(|| "bleu,chrf,meteor,lepor".to_string());
    let mut chosen: Vec<&str> = Vec::new();
    for name in selected.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let canonical = match name {
            "bleu" => metric_names::BLEU,
            "chrf" => metric_names::CHRF,
            "meteor" => metric_names::METEOR_LITE,
            "lepor" => metric_names::LEPOR,
            other => {
                return Err(MatraError::invalid(format!(
                    "unknown baseline metric {other:?}; expected bleu, chrf, meteor or lepor"
                )))
            }
        };
        if !chosen.contains(&canonical) {
            chosen.push(canonical);
        }
    }
    if chosen.is_empty() {
        return Err(MatraError::invalid("--metrics selected no metric"));
    }

    let segments = load_corpus(&corpus_path, corpus_format(&corpus_path))?;
    let mut scores = Vec::with_capacity(segments.len() * chosen.len());
    for segment in &segments {
        let candidate = tokenize(&segment.candidate_text);
        let reference = tokenize(&segment.reference_text);
        for metric in &chosen {
            let value = match *metric {
                metric_names::BLEU => bleu_sentence(&candidate, &reference),
                metric_names::CHRF => chrf(&segment.candidate_text, &segment.reference_text),
                metric_names::METEOR_LITE => meteor_lite(&candidate, &reference, &stem_rules),
                _ => lepor_basic(&candidate, &reference),
            };
            scores.push(MetricScore {
                segment_id: segment.segment_id.clone(),
                metric_name: metric.to_string(),
                value,
            });
        }
    }
    save_metric_scores(&scores, &out)
}
