//! `cplx` — command-line front end for the complexity classification
//! pipeline.
//!
//! Every subcommand writes its outputs under `--out` together with a
//! `manifest.txt` holding the fingerprint of the resolved run configuration.
//! Exit codes: 0 on success, 2 on usage or precondition errors, 1 on runtime
//! failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cplx::corpus::{
    compute_stats, generate_synthetic, inject_dead_helpers, load_corpus, save_corpus,
    stratified_split, CorpusError, LoadMode, Schema, SynthSpec,
};
use cplx::empirical::{fit_complexity, import_series, measure, EmpiricalError, Units};
use cplx::eval::{
    cross_language_eval, dce_ablation, evaluate_with, preprocess, seq_length_ablation,
    seq_length_csv, EvalError, Protocol,
};
use cplx::features::{features_of, FeatureVector};
use cplx::fingerprint::fingerprint;
use cplx::interpret::{
    collect_activations, matrix_csv, nmf, parse_layer_range, write_report, InterpretError,
    ReportMeta, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use cplx::model::{train_with, ModelError, TrainOptions};
use cplx::normalize::{build_vocab, eliminate_dead_code, VocabError};
use cplx::{ClassifierConfig, ClassifierModel, Corpus, Execution, Language, Target};

#[derive(Parser, Debug)]
#[command(
    name = "cplx",
    version,
    about = "Classify and measure the computational complexity of source code"
)]
struct Cli {
    /// Run batch work on a single thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a raw corpus file and write it in canonical form.
    Ingest(IngestArgs),
    /// Per-class counts and length statistics.
    Stats(StatsArgs),
    /// Label-stratified train/test split.
    Split(SplitArgs),
    /// Generate a synthetic corpus with known labels.
    Synth(SynthArgs),
    /// Remove unused functions and variables.
    Dce(DceArgs),
    /// Structural features, one row per sample.
    Features(FeaturesArgs),
    /// Train the attention classifier.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a labelled corpus.
    Eval(EvalArgs),
    /// Accuracy versus maximum sequence length.
    AblateSeqlen(AblateSeqlenArgs),
    /// Accuracy with and without dead-code elimination.
    AblateDce(AblateDceArgs),
    /// Cross-language transfer: evaluate on languages unseen in training.
    Clt(CltArgs),
    /// Factorize head activations of one sample into an HTML heat map.
    Nmf(NmfArgs),
    /// Estimate complexity from timed runs or an imported series.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Corpus file, one JSON record per line.
    #[arg(long)]
    input: PathBuf,
    /// Labels each record must carry: time, space, both or any.
    #[arg(long, default_value = "any")]
    schema: Schema,
    /// Skip malformed records instead of rejecting the file.
    #[arg(long)]
    lenient: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Corpus file to summarize.
    #[arg(long)]
    corpus: PathBuf,
    /// Label set to count.
    #[arg(long, default_value = "time")]
    target: Target,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Labelled corpus to split.
    #[arg(long)]
    corpus: PathBuf,
    /// Share of every class assigned to test.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Label set to stratify on.
    #[arg(long, default_value = "time")]
    target: Target,
    /// Shuffle seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Samples per class and language.
    #[arg(long)]
    per_class: usize,
    /// Comma-separated language tags.
    #[arg(long, value_delimiter = ',', default_value = "cpp")]
    langs: Vec<Language>,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append an unused helper of at least this many lines to every sample.
    #[arg(long)]
    dead_helpers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DceArgs {
    /// A single source file (requires --lang).
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    input: Option<PathBuf>,
    /// Language of --input: cpp, python or java.
    #[arg(long, requires = "input")]
    lang: Option<Language>,
    /// A corpus file; every sample is transformed.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Corpus to featurize.
    #[arg(long)]
    corpus: PathBuf,
    /// Eliminate dead code before extraction.
    #[arg(long)]
    dce: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Model hyperparameters. Precedence: flag > `--config` file > defaults.
#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Label set to predict: time or space.
    #[arg(long)]
    target: Option<Target>,
    /// Token budget per sample, BOS and EOS included.
    #[arg(long)]
    max_len: Option<usize>,
    /// Embedding width.
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Attention heads per layer.
    #[arg(long)]
    num_heads: Option<usize>,
    /// Stacked attention layers.
    #[arg(long)]
    num_attention_layers: Option<usize>,
    /// Comma-separated hidden widths of the classification head.
    #[arg(long)]
    ffnn_hidden_dims: Option<String>,
    /// Adam step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Passes over the training set.
    #[arg(long)]
    epochs: Option<usize>,
    /// Samples per gradient computation.
    #[arg(long)]
    micro_batch: Option<usize>,
    /// Micro-batches accumulated per update.
    #[arg(long)]
    accumulation_steps: Option<usize>,
    /// Initialization and shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra overrides, `key=value`, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ClassifierConfig> {
        let mut cfg = match &self.config {
            Some(path) => ClassifierConfig::from_kv_str(&read_text(path)?)?,
            None => ClassifierConfig::default(),
        };
        let mut flags: Vec<(&str, String)> = Vec::new();
        if let Some(t) = self.target {
            flags.push(("target", t.name().to_string()));
        }
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                flags.push((k, v));
            }
        };
        push("max_len", self.max_len.map(|v| v.to_string()));
        push("embed_dim", self.embed_dim.map(|v| v.to_string()));
        push("num_heads", self.num_heads.map(|v| v.to_string()));
        push(
            "num_attention_layers",
            self.num_attention_layers.map(|v| v.to_string()),
        );
        push("ffnn_hidden_dims", self.ffnn_hidden_dims.clone());
        push("learning_rate", self.learning_rate.map(|v| v.to_string()));
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("micro_batch", self.micro_batch.map(|v| v.to_string()));
        push(
            "accumulation_steps",
            self.accumulation_steps.map(|v| v.to_string()),
        );
        push("seed", self.seed.map(|v| v.to_string()));
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Precondition(format!("--set expects key=value, got {kv:?}")))?;
            flags.push((k.trim(), v.trim().to_string()));
        }
        for (k, v) in flags {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    /// Share of every class held out per run.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Vocabulary size limit, reserved entries included.
    #[arg(long, default_value_t = 5000)]
    vocab_cap: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training corpus.
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Vocabulary size limit, reserved entries included.
    #[arg(long, default_value_t = 5000)]
    vocab_cap: usize,
    /// Eliminate dead code before tokenization.
    #[arg(long)]
    dce: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoint to evaluate.
    #[arg(long)]
    model: PathBuf,
    /// Labelled test corpus.
    #[arg(long)]
    test: PathBuf,
    /// Eliminate dead code before tokenization.
    #[arg(long)]
    dce: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateSeqlenArgs {
    /// Labelled corpus, re-split for every run.
    #[arg(long)]
    corpus: PathBuf,
    /// Strictly ascending, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    lengths: Vec<usize>,
    /// Seeded runs per length.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Eliminate dead code before tokenization.
    #[arg(long)]
    dce: bool,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateDceArgs {
    /// Labelled corpus, re-split for every run.
    #[arg(long)]
    corpus: PathBuf,
    /// Seeded runs per arm.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CltArgs {
    /// Checkpoint trained on other languages.
    #[arg(long)]
    model: PathBuf,
    /// Corpus in the unseen language(s).
    #[arg(long)]
    corpus: PathBuf,
    /// Eliminate dead code before tokenization.
    #[arg(long)]
    dce: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NmfArgs {
    /// Trained checkpoint.
    #[arg(long)]
    model: PathBuf,
    /// Corpus containing the sample.
    #[arg(long)]
    corpus: PathBuf,
    /// Id of the sample to visualize.
    #[arg(long)]
    sample_id: String,
    /// Inclusive 0-based head-layer range, `a:b`.
    #[arg(long, default_value = "0:0")]
    layers: String,
    /// Number of NMF components.
    #[arg(long, default_value_t = 3)]
    components: usize,
    /// Initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration limit.
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Stop when one iteration improves the relative error by less than this.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// HTML report path; W.csv, H.csv and the manifest are written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Shell command with an `{n}` placeholder.
    #[arg(long, conflicts_with = "import", required_unless_present = "import")]
    cmd: Option<String>,
    /// Comma-separated `n,cost` rows.
    #[arg(long)]
    import: Option<PathBuf>,
    /// Comma-separated input sizes substituted for `{n}`.
    #[arg(long, value_delimiter = ',', requires = "cmd")]
    sizes: Vec<u64>,
    /// Runs per size; the median is kept.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Units of imported costs: seconds or bytes.
    #[arg(long, default_value = "seconds")]
    units: Units,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// A failed precondition or bad configuration (exit code 2).
#[derive(Debug)]
struct Precondition(String);

impl std::fmt::Display for Precondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Precondition {}

fn is_precondition(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<Precondition>().is_some()
            || e.downcast_ref::<CorpusError>()
                .is_some_and(|e| e.is_precondition())
            || e.downcast_ref::<ModelError>()
                .is_some_and(|e| e.is_precondition())
            || e.downcast_ref::<EvalError>()
                .is_some_and(|e| e.is_precondition())
            || e.downcast_ref::<EmpiricalError>()
                .is_some_and(|e| e.is_precondition())
            || e.downcast_ref::<VocabError>().is_some()
            || e.downcast_ref::<InterpretError>()
                .is_some_and(|e| !matches!(e, InterpretError::Io { .. }))
    })
}

/// Output directory bound to one run's fingerprint.
struct Outputs {
    dir: PathBuf,
    inputs: Vec<PathBuf>,
    fingerprint: String,
    written: Vec<String>,
    manifest: Vec<(String, String)>,
}

impl Outputs {
    fn new(
        dir: &Path,
        command: &str,
        inputs: &[&Path],
        mut settings: Vec<(String, String)>,
    ) -> Result<Outputs> {
        settings.push(("command".into(), command.into()));
        let fingerprint = fingerprint(settings.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let inputs = inputs
            .iter()
            .filter_map(|p| fs::canonicalize(p).ok())
            .collect();
        Ok(Outputs {
            dir: dir.to_path_buf(),
            inputs,
            fingerprint,
            written: Vec::new(),
            manifest: settings,
        })
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Ok(canon) = fs::canonicalize(&path) {
            if self.inputs.contains(&canon) {
                return Err(Precondition(format!(
                    "refusing to overwrite input {}",
                    path.display()
                ))
                .into());
            }
        }
        Ok(path)
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name)?;
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    fn finish(mut self) -> Result<String> {
        let mut text = format!("fingerprint={}\n", self.fingerprint);
        self.manifest.sort();
        for (k, v) in &self.manifest {
            let _ = writeln!(text, "{k}={v}");
        }
        for name in &self.written {
            let _ = writeln!(text, "output={name}");
        }
        let path = self.path("manifest.txt")?;
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.fingerprint)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<Corpus> {
    Ok(load_corpus(path, Schema::Any, LoadMode::Strict)?.corpus)
}

fn corpus_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    cplx::corpus::write_corpus(corpus, &mut buf).expect("writing to memory");
    buf
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(fingerprint([("bytes", hex_of(&bytes))]))
}

fn hex_of(bytes: &[u8]) -> String {
    bytes
        .iter()
        .fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn config_pairs(cfg: &ClassifierConfig) -> Vec<(String, String)> {
    cfg.to_pairs()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_ingest(a: &IngestArgs) -> Result<String> {
    let mode = if a.lenient {
        LoadMode::Lenient
    } else {
        LoadMode::Strict
    };
    let report = load_corpus(&a.input, a.schema, mode)?;
    let settings = vec![
        kv("input", file_digest(&a.input)?),
        kv("schema", format!("{:?}", a.schema)),
        kv("mode", format!("{mode:?}")),
    ];
    let mut out = Outputs::new(&a.out, "ingest", &[&a.input], settings)?;
    out.write("corpus.jsonl", corpus_bytes(&report.corpus))?;
    let mut skipped = String::from("line,reason\n");
    for s in &report.skipped {
        let _ = writeln!(skipped, "{},\"{}\"", s.line, s.reason.replace('"', "\"\""));
    }
    out.write("skipped.csv", skipped)?;
    let fp = out.finish()?;
    Ok(format!(
        "ingested {} records, skipped {} [{fp}]",
        report.corpus.len(),
        report.skipped.len()
    ))
}

fn cmd_stats(a: &StatsArgs) -> Result<String> {
    let corpus = load(&a.corpus)?;
    let stats = compute_stats(&corpus, a.target)?;
    let settings = vec![
        kv("corpus", file_digest(&a.corpus)?),
        kv("target", a.target.name()),
    ];
    let mut out = Outputs::new(&a.out, "stats", &[&a.corpus], settings)?;
    let table = stats.to_table();
    print!("{table}");
    out.write("stats.txt", &table)?;
    out.write("stats.csv", stats.to_csv())?;
    let fp = out.finish()?;
    Ok(format!(
        "{} samples, {} labelled [{fp}]",
        stats.total, stats.labelled
    ))
}

fn cmd_split(a: &SplitArgs) -> Result<String> {
    let corpus = load(&a.corpus)?;
    let split = stratified_split(&corpus, a.test_fraction, a.target, a.seed)?;
    for w in &split.warnings {
        log::warn!("{w}");
    }
    let settings = vec![
        kv("corpus", file_digest(&a.corpus)?),
        kv("test_fraction", a.test_fraction),
        kv("target", a.target.name()),
        kv("seed", a.seed),
    ];
    let mut out = Outputs::new(&a.out, "split", &[&a.corpus], settings)?;
    out.write("train.jsonl", corpus_bytes(&split.train))?;
    out.write("test.jsonl", corpus_bytes(&split.test))?;
    let fp = out.finish()?;
    Ok(format!(
        "train {} / test {} [{fp}]",
        split.train.len(),
        split.test.len()
    ))
}

fn cmd_synth(a: &SynthArgs) -> Result<String> {
    let spec = SynthSpec {
        per_class_count: a.per_class,
        languages: a.langs.clone(),
        seed: a.seed,
    };
    let mut corpus = generate_synthetic(&spec)?;
    if let Some(lines) = a.dead_helpers {
        corpus = inject_dead_helpers(&corpus, lines, a.seed);
    }
    let langs: Vec<&str> = a.langs.iter().map(|l| l.tag()).collect();
    let settings = vec![
        kv("per_class", a.per_class),
        kv("langs", langs.join(",")),
        kv("seed", a.seed),
        kv(
            "dead_helpers",
            a.dead_helpers.map_or("none".to_string(), |n| n.to_string()),
        ),
    ];
    let mut out = Outputs::new(&a.out, "synth", &[], settings)?;
    let path = out.path("corpus.jsonl")?;
    save_corpus(&corpus, &path).with_context(|| format!("cannot write {}", path.display()))?;
    out.written.push("corpus.jsonl".into());
    let fp = out.finish()?;
    Ok(format!("generated {} samples [{fp}]", corpus.len()))
}

fn removals_header() -> String {
    String::from("id,kind,name,start,end\n")
}

fn cmd_dce(a: &DceArgs) -> Result<String> {
    if let Some(input) = &a.input {
        let lang = a
            .lang
            .clone()
            .ok_or_else(|| Precondition("--input requires --lang".into()))?;
        let source = read_text(input)?;
        let (clean, report) = eliminate_dead_code(&source, &lang);
        let settings = vec![kv("input", file_digest(input)?), kv("lang", lang.tag())];
        let mut out = Outputs::new(&a.out, "dce", &[input], settings)?;
        let name = input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "output.txt".into());
        out.write(&name, &clean)?;
        let id = name.clone();
        let mut csv = removals_header();
        for r in &report.removed {
            let _ = writeln!(csv, "{id},{},{},{},{}", r.kind, r.name, r.span.0, r.span.1);
        }
        out.write("removals.csv", csv)?;
        for note in &report.skipped {
            log::warn!("{name}: {note}");
        }
        let fp = out.finish()?;
        return Ok(format!(
            "removed {} definitions in {} passes [{fp}]",
            report.removed.len(),
            report.passes
        ));
    }
    let path = a
        .corpus
        .as_ref()
        .expect("clap enforces --input or --corpus");
    let corpus = load(path)?;
    let mut csv = removals_header();
    let mut skipped = String::from("id,reason\n");
    let mut removed = 0;
    let mut cleaned = Vec::with_capacity(corpus.len());
    for s in corpus.samples() {
        let (clean, report) = eliminate_dead_code(&s.source, &s.language);
        for r in &report.removed {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                s.id, r.kind, r.name, r.span.0, r.span.1
            );
        }
        for note in &report.skipped {
            let _ = writeln!(skipped, "{},\"{}\"", s.id, note.replace('"', "\"\""));
        }
        removed += report.removed.len();
        cleaned.push(cplx::CodeSample {
            source: clean,
            ..s.clone()
        });
    }
    let clean = Corpus::new(cleaned)?;
    let settings = vec![kv("corpus", file_digest(path)?)];
    let mut out = Outputs::new(&a.out, "dce", &[path], settings)?;
    out.write("corpus.jsonl", corpus_bytes(&clean))?;
    out.write("removals.csv", csv)?;
    out.write("skipped.csv", skipped)?;
    let fp = out.finish()?;
    Ok(format!(
        "removed {removed} definitions across {} samples [{fp}]",
        corpus.len()
    ))
}

fn cmd_features(a: &FeaturesArgs, exec: Execution) -> Result<String> {
    let corpus = load(&a.corpus)?;
    let rows = exec.map(corpus.samples(), |s| {
        let source = if a.dce {
            eliminate_dead_code(&s.source, &s.language).0
        } else {
            s.source.clone()
        };
        features_of(&source, &s.language)
    });
    let mut csv = format!("id,language,{}\n", FeatureVector::csv_header());
    for (s, fv) in corpus.samples().iter().zip(&rows) {
        let _ = writeln!(csv, "{},{},{}", s.id, s.language.tag(), fv.to_csv_row());
    }
    let settings = vec![kv("corpus", file_digest(&a.corpus)?), kv("dce", a.dce)];
    let mut out = Outputs::new(&a.out, "features", &[&a.corpus], settings)?;
    out.write("features.csv", csv)?;
    let fp = out.finish()?;
    Ok(format!("{} feature rows [{fp}]", rows.len()))
}

fn cmd_train(a: &TrainArgs, exec: Execution) -> Result<String> {
    let cfg = a.model.resolve()?;
    let protocol = Protocol {
        vocab_cap: a.vocab_cap,
        dead_code_elimination: a.dce,
        execution: exec,
        ..Protocol::default()
    };
    let corpus = preprocess(&load(&a.corpus)?, &protocol)?;
    let vocab = build_vocab(&[&corpus], a.vocab_cap)?;
    let outcome = train_with(&corpus, &cfg, &vocab, &TrainOptions { execution: exec })?;
    let mut settings = config_pairs(&cfg);
    settings.push(kv("corpus", file_digest(&a.corpus)?));
    settings.push(kv("vocab_cap", a.vocab_cap));
    settings.push(kv("dce", a.dce));
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    if let Some(c) = &a.model.config {
        inputs.push(c);
    }
    let mut out = Outputs::new(&a.out, "train", &inputs, settings)?;
    out.write("model.ckpt", outcome.model.to_bytes())?;
    out.write("loss.csv", outcome.loss_log_csv())?;
    out.write("config.txt", cfg.to_kv_string())?;
    let fp = out.finish()?;
    let last = outcome.history.last().map_or(f64::NAN, |e| e.loss);
    Ok(format!(
        "trained {} epochs, final loss {last:.4} [{fp}]",
        outcome.history.len()
    ))
}

fn write_metrics(out: &mut Outputs, m: &cplx::eval::Metrics) -> Result<()> {
    out.write("metrics.txt", m.to_table())?;
    out.write("per_class.csv", m.per_class_csv())?;
    out.write("confusion.csv", m.confusion_csv())?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs, exec: Execution) -> Result<String> {
    let model = ClassifierModel::load(&a.model)?;
    let target = model.config().target;
    let protocol = Protocol {
        dead_code_elimination: a.dce,
        execution: exec,
        ..Protocol::default()
    };
    let test = preprocess(&load(&a.test)?, &protocol)?;
    let metrics = evaluate_with(&model, &test, target, exec)?;
    let settings = vec![
        kv("model", model.fingerprint()),
        kv("test", file_digest(&a.test)?),
        kv("dce", a.dce),
    ];
    let mut out = Outputs::new(&a.out, "eval", &[&a.model, &a.test], settings)?;
    print!("{}", metrics.to_table());
    write_metrics(&mut out, &metrics)?;
    let fp = out.finish()?;
    Ok(format!(
        "accuracy {:.4} on {} samples [{fp}]",
        metrics.overall_accuracy, metrics.n_test
    ))
}

fn protocol_of(p: &ProtocolArgs, dce: bool, exec: Execution) -> Protocol {
    Protocol {
        test_fraction: p.test_fraction,
        vocab_cap: p.vocab_cap,
        dead_code_elimination: dce,
        execution: exec,
    }
}

fn protocol_pairs(p: &Protocol) -> Vec<(String, String)> {
    vec![
        kv("test_fraction", p.test_fraction),
        kv("vocab_cap", p.vocab_cap),
        kv("dce", p.dead_code_elimination),
    ]
}

fn cmd_ablate_seqlen(a: &AblateSeqlenArgs, exec: Execution) -> Result<String> {
    let cfg = a.model.resolve()?;
    let protocol = protocol_of(&a.protocol, a.dce, exec);
    let corpus = load(&a.corpus)?;
    let rows = seq_length_ablation(&cfg, &corpus, &a.lengths, a.runs, &protocol)?;
    let mut settings = config_pairs(&cfg);
    settings.extend(protocol_pairs(&protocol));
    settings.push(kv("corpus", file_digest(&a.corpus)?));
    settings.push(kv("runs", a.runs));
    let lengths: Vec<String> = a.lengths.iter().map(|l| l.to_string()).collect();
    settings.push(kv("lengths", lengths.join(",")));
    let mut out = Outputs::new(&a.out, "ablate-seqlen", &[&a.corpus], settings)?;
    let mut table = String::new();
    let mut runs = String::from("max_len,seed,accuracy,n_test\n");
    for (len, s) in &rows {
        let _ = writeln!(table, "max_len {len}:");
        table.push_str(&s.to_table());
        for (seed, m) in s.seeds.iter().zip(&s.runs) {
            let _ = writeln!(runs, "{len},{seed},{:.6},{}", m.overall_accuracy, m.n_test);
        }
    }
    print!("{table}");
    out.write("seqlen.txt", &table)?;
    out.write("seqlen.csv", seq_length_csv(&rows))?;
    out.write("runs.csv", runs)?;
    let fp = out.finish()?;
    Ok(format!("{} lengths x {} runs [{fp}]", rows.len(), a.runs))
}

fn cmd_ablate_dce(a: &AblateDceArgs, exec: Execution) -> Result<String> {
    let cfg = a.model.resolve()?;
    let protocol = protocol_of(&a.protocol, false, exec);
    let corpus = load(&a.corpus)?;
    let result = dce_ablation(&cfg, &corpus, a.runs, &protocol)?;
    let mut settings = config_pairs(&cfg);
    settings.extend(protocol_pairs(&protocol));
    settings.push(kv("corpus", file_digest(&a.corpus)?));
    settings.push(kv("runs", a.runs));
    let mut out = Outputs::new(&a.out, "ablate-dce", &[&a.corpus], settings)?;
    let table = format!(
        "with dead-code elimination (mean tokens {:.1}):\n{}\nwithout (mean tokens {:.1}):\n{}",
        result.with_dce.mean_tokens,
        result.with_dce.to_table(),
        result.without_dce.mean_tokens,
        result.without_dce.to_table()
    );
    print!("{table}");
    out.write("dce_ablation.txt", &table)?;
    out.write("dce_ablation.csv", result.to_csv())?;
    out.write("with_dce_runs.csv", result.with_dce.runs_csv())?;
    out.write("without_dce_runs.csv", result.without_dce.runs_csv())?;
    let fp = out.finish()?;
    Ok(format!(
        "with {:.4} / without {:.4} [{fp}]",
        result.with_dce.mean, result.without_dce.mean
    ))
}

fn cmd_clt(a: &CltArgs, exec: Execution) -> Result<String> {
    let model = ClassifierModel::load(&a.model)?;
    let target = model.config().target;
    let protocol = Protocol {
        dead_code_elimination: a.dce,
        execution: exec,
        ..Protocol::default()
    };
    let corpus = preprocess(&load(&a.corpus)?, &protocol)?;
    let report = cross_language_eval(&model, &corpus, target)?;
    let settings = vec![
        kv("model", model.fingerprint()),
        kv("corpus", file_digest(&a.corpus)?),
        kv("dce", a.dce),
    ];
    let mut out = Outputs::new(&a.out, "clt", &[&a.model, &a.corpus], settings)?;
    let table = report.to_table();
    print!("{table}");
    out.write("clt.txt", &table)?;
    let tags = |ls: &[Language]| {
        ls.iter()
            .map(|l| l.tag().to_string())
            .collect::<Vec<_>>()
            .join("+")
    };
    out.write(
        "clt.csv",
        format!(
            "train_languages,test_languages,accuracy,random_baseline,n_test\n{},{},{:.6},{:.6},{}\n",
            tags(&report.train_languages),
            tags(&report.test_languages),
            report.metrics.overall_accuracy,
            report.random_baseline,
            report.metrics.n_test
        ),
    )?;
    out.write("per_class.csv", report.metrics.per_class_csv())?;
    out.write("confusion.csv", report.metrics.confusion_csv())?;
    let fp = out.finish()?;
    Ok(format!(
        "accuracy {:.4} vs random {:.4} [{fp}]",
        report.metrics.overall_accuracy, report.random_baseline
    ))
}

fn cmd_nmf(a: &NmfArgs) -> Result<String> {
    let model = ClassifierModel::load(&a.model)?;
    let corpus = load(&a.corpus)?;
    let sample = corpus
        .get(&a.sample_id)
        .ok_or_else(|| Precondition(format!("sample {:?} not in corpus", a.sample_id)))?;
    let layers = parse_layer_range(&a.layers)
        .ok_or_else(|| Precondition(format!("--layers expects a:b, got {:?}", a.layers)))?;
    let acts = collect_activations(&model, sample, layers)?;
    let factors = nmf(&acts.values, a.components, a.max_iters, a.tol, a.seed)?;
    let settings = vec![
        kv("model", model.fingerprint()),
        kv("corpus", file_digest(&a.corpus)?),
        kv("sample_id", &a.sample_id),
        kv("layers", format!("{}:{}", layers.0, layers.1)),
        kv("components", a.components),
        kv("seed", a.seed),
        kv("max_iters", a.max_iters),
        kv("tol", a.tol),
    ];
    let dir = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let report_name = a
        .out
        .file_name()
        .ok_or_else(|| Precondition("--out must name a report file".into()))?
        .to_string_lossy()
        .into_owned();
    let mut out = Outputs::new(&dir, "nmf", &[&a.model, &a.corpus], settings)?;
    let meta = ReportMeta {
        title: format!("Activation components for {}", a.sample_id),
        sample_id: a.sample_id.clone(),
        seed: a.seed,
        fingerprint: out.fingerprint.clone(),
        layer_range: layers,
        relative_error: factors.final_relative_error,
    };
    let report_path = out.path(&report_name)?;
    write_report(&report_path, &acts.token_lexemes, &factors.w, &meta)?;
    out.written.push(report_name);
    out.write("W.csv", matrix_csv(&factors.w))?;
    out.write("H.csv", matrix_csv(&factors.h))?;
    let fp = out.finish()?;
    Ok(format!(
        "{} tokens, k={}, relative error {:.4} after {} iterations [{fp}]",
        acts.token_lexemes.len(),
        factors.k,
        factors.final_relative_error,
        factors.iterations_used
    ))
}

fn cmd_fit(a: &FitArgs) -> Result<String> {
    let (series, mut settings, inputs): (_, _, Vec<&Path>) = match (&a.cmd, &a.import) {
        (Some(cmd), None) => {
            if a.sizes.is_empty() {
                bail!(Precondition("--cmd requires --sizes".into()));
            }
            let series = measure(cmd, &a.sizes, a.repeats)?;
            let sizes: Vec<String> = a.sizes.iter().map(|s| s.to_string()).collect();
            let settings = vec![
                kv("cmd", cmd),
                kv("sizes", sizes.join(",")),
                kv("repeats", a.repeats),
            ];
            (series, settings, vec![])
        }
        (None, Some(path)) => {
            let series = import_series(&read_text(path)?, a.units, &path_str(path))?;
            (
                series,
                vec![kv("import", file_digest(path)?)],
                vec![path.as_path()],
            )
        }
        _ => {
            return Err(Precondition("exactly one of --cmd or --import is required".into()).into())
        }
    };
    settings.push(kv("units", a.units));
    let result = fit_complexity(&series)?;
    let mut out = Outputs::new(&a.out, "fit", &inputs, settings)?;
    let table = result.to_table();
    print!("{table}");
    out.write("fit.txt", &table)?;
    out.write("fit.csv", result.to_csv())?;
    out.write("series.csv", series.to_csv())?;
    if !series.failures.is_empty() {
        let mut csv = String::from("n,reason\n");
        for (n, reason) in &series.failures {
            let _ = writeln!(csv, "{n},\"{}\"", reason.replace('"', "\"\""));
        }
        out.write("failures.csv", csv)?;
    }
    let fp = out.finish()?;
    let proxy = if result.empirical_proxy {
        " (empirical proxy)"
    } else {
        ""
    };
    Ok(format!("winner {}{proxy} [{fp}]", result.winner_class()))
}

fn dispatch(cli: &Cli) -> Result<String> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Dce(a) => cmd_dce(a),
        Command::Features(a) => cmd_features(a, exec),
        Command::Train(a) => cmd_train(a, exec),
        Command::Eval(a) => cmd_eval(a, exec),
        Command::AblateSeqlen(a) => cmd_ablate_seqlen(a, exec),
        Command::AblateDce(a) => cmd_ablate_dce(a, exec),
        Command::Clt(a) => cmd_clt(a, exec),
        Command::Nmf(a) => cmd_nmf(a),
        Command::Fit(a) => cmd_fit(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_precondition(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
