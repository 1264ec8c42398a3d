//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cplx::corpus::{
    generate_synthetic, inject_dead_helpers, load_corpus, LoadMode, Schema, SynthSpec,
};
use cplx::normalize::{tokenize, DceReport, TokenKind, Vocabulary, RESERVED};
use cplx::{
    ClassifierConfig, ClassifierModel, CodeSample, ComplexityClass, Corpus, Language, Target,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(name: &str) -> String {
    fs::read_to_string(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_corpus() -> Corpus {
    load_corpus(
        fixtures_dir().join("corpus.jsonl"),
        Schema::Time,
        LoadMode::Strict,
    )
    .expect("fixture corpus loads")
    .corpus
}

/// Compares `actual` with the frozen file, or rewrites it when
/// `BLESS_GOLDEN` is set.
pub fn golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixtures_dir().join("golden").join(name);
    if std::env::var_os("BLESS_GOLDEN").is_some() {
        fs::write(&path, actual).map_err(|e| format!("{name}: {e}"))?;
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected
        .lines()
        .zip(actual.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()));
    Err(format!(
        "{name} differs from the frozen fixture at line {}",
        line + 1
    ))
}

pub fn synth(per_class: usize, languages: &[Language], seed: u64) -> Corpus {
    generate_synthetic(&SynthSpec {
        per_class_count: per_class,
        languages: languages.to_vec(),
        seed,
    })
    .expect("synthetic corpus")
}

pub fn dead_code_corpus() -> Corpus {
    inject_dead_helpers(
        &synth(4, &[Language::Cpp, Language::Python, Language::Java], 13),
        10,
        2,
    )
}

/// Synthetic programs whose prepended dead helpers push the informative
/// code past a short truncation budget.
pub fn eviction_corpus() -> Corpus {
    inject_dead_helpers(&synth(30, &[Language::Cpp], 0), 12, 1)
}

pub fn eviction_config() -> ClassifierConfig {
    ClassifierConfig {
        max_len: 96,
        embed_dim: 32,
        num_attention_layers: 1,
        epochs: 15,
        ..ClassifierConfig::default()
    }
}

pub fn tiny_config(epochs: usize) -> ClassifierConfig {
    ClassifierConfig {
        max_len: 64,
        embed_dim: 8,
        num_heads: 2,
        num_attention_layers: 1,
        ffnn_hidden_dims: vec![8],
        epochs,
        ..ClassifierConfig::default()
    }
}

pub fn non_comment_tokens(source: &str, lang: &Language) -> usize {
    tokenize(source, lang)
        .iter()
        .filter(|t| {
            !matches!(
                t.kind,
                TokenKind::Comment | TokenKind::WhitespaceSignificant
            )
        })
        .count()
}

/// Vocabulary of 16 entries, embedding 8, sequences up to 12 ids, with
/// every parameter (biases and pooling query included) drawn at random so
/// no gradient vanishes by construction.
pub fn mini_model() -> (ClassifierModel, Vec<(Vec<u32>, usize)>) {
    let mut entries: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    entries.extend(
        [
            "for", "(", ")", "{", "}", "i", "n", "<", "++", ";", "=", "0",
        ]
        .map(String::from),
    );
    let vocab = Vocabulary::from_entries(entries).expect("vocabulary");
    let cfg = ClassifierConfig {
        max_len: 12,
        embed_dim: 8,
        num_heads: 2,
        num_attention_layers: 2,
        ffnn_hidden_dims: vec![6, 5],
        ..ClassifierConfig::desk(Target::Time)
    };
    let mut model = ClassifierModel::initialize(&cfg, &vocab).expect("mini model");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let normal = Normal::new(0.0, 0.4).unwrap();
    for t in model.params_mut().tensors_mut() {
        t.mapv_inplace(|_| normal.sample(&mut rng));
    }
    let batch = vec![
        (vec![2, 4, 5, 9, 10, 6, 3], 2),
        (vec![2, 14, 9, 15, 10, 11, 12, 13, 7, 8, 5, 3], 5),
        (vec![2, 15, 3], 0),
    ];
    (model, batch)
}

/// 1000 samples, 558 of them in the majority class O(n).
pub fn imbalanced_fixture() -> Corpus {
    let counts = [
        (ComplexityClass::Linear, 558),
        (ComplexityClass::Quadratic, 200),
        (ComplexityClass::NLogN, 80),
        (ComplexityClass::Constant, 50),
        (ComplexityClass::Cubic, 40),
        (ComplexityClass::LogN, 40),
        (ComplexityClass::NpHard, 32),
    ];
    labelled_corpus(&counts)
}

/// Class counts of the GeeksforGeeks C++ time-complexity table.
pub fn paper_cpp_shape() -> Corpus {
    labelled_corpus(&[
        (ComplexityClass::Constant, 33),
        (ComplexityClass::Linear, 787),
        (ComplexityClass::Quadratic, 374),
        (ComplexityClass::Cubic, 35),
        (ComplexityClass::LogN, 26),
        (ComplexityClass::NLogN, 127),
        (ComplexityClass::NpHard, 28),
    ])
}

pub fn labelled_corpus(counts: &[(ComplexityClass, usize)]) -> Corpus {
    let mut samples = Vec::new();
    for (class, n) in counts {
        for i in 0..*n {
            let id = format!("{}-{i:04}", class.name());
            samples.push(
                CodeSample::new(id, Language::Cpp, format!("int f{i}() {{ return {i}; }}"))
                    .with_time(*class),
            );
        }
    }
    Corpus::new(samples).expect("fixture corpus")
}

pub fn render_tokens(source: &str, lang: &Language) -> String {
    let mut out = String::new();
    for t in tokenize(source, lang) {
        let _ = writeln!(
            out,
            "{}..{}\t{:?}\t{:?}",
            t.span.0, t.span.1, t.kind, t.text
        );
    }
    out
}

pub fn render_removals(report: &DceReport) -> String {
    let mut out = String::from("kind,name,start,end\n");
    for r in &report.removed {
        let _ = writeln!(out, "{},{},{},{}", r.kind, r.name, r.span.0, r.span.1);
    }
    for s in &report.skipped {
        let _ = writeln!(out, "skipped: {s}");
    }
    let _ = writeln!(out, "passes: {}", report.passes);
    out
}
