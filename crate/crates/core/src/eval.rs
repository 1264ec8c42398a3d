//! Evaluation protocols: metrics, multi-seed runs, sequence-length and
//! dead-code ablations, cross-language transfer, and reference predictors.

use std::fmt::Write as _;

use crate::corpus::{
    stratified_split, CodeSample, ComplexityClass, Corpus, CorpusError, Language, Target,
};
use crate::fingerprint::fingerprint;
use crate::model::{
    train_with, Classifier, ClassifierConfig, ClassifierModel, ModelError, TrainOptions,
};
use crate::normalize::{build_vocab, eliminate_dead_code, tokenize, TokenKind, VocabError};
use crate::par::Execution;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("test corpus is empty")]
    EmptyTest,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl EvalError {
    pub fn is_precondition(&self) -> bool {
        match self {
            EvalError::Corpus(e) => e.is_precondition(),
            EvalError::Model(e) => e.is_precondition(),
            _ => true,
        }
    }
}

/// Confusion-matrix based metrics; rows are true classes, columns predicted.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub target: Target,
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
    pub overall_accuracy: f64,
    /// `None` for classes absent from the test set.
    pub per_class_accuracy: Vec<Option<f64>>,
}

impl Metrics {
    pub fn from_confusion(
        target: Target,
        confusion: Vec<Vec<usize>>,
    ) -> Result<Metrics, EvalError> {
        let k = target.num_classes();
        if confusion.len() != k || confusion.iter().any(|r| r.len() != k) {
            return Err(EvalError::Precondition(format!(
                "confusion matrix must be {k}x{k}"
            )));
        }
        let n_test: usize = confusion.iter().flatten().sum();
        if n_test == 0 {
            return Err(EvalError::EmptyTest);
        }
        let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row[i] as f64 / total as f64)
            })
            .collect();
        Ok(Metrics {
            target,
            overall_accuracy: correct as f64 / n_test as f64,
            confusion,
            n_test,
            per_class_accuracy,
        })
    }

    /// Builds metrics from `(true, predicted)` class-index pairs.
    pub fn from_pairs(
        target: Target,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Metrics, EvalError> {
        let k = target.num_classes();
        let mut confusion = vec![vec![0usize; k]; k];
        for (t, p) in pairs {
            if t >= k || p >= k {
                return Err(EvalError::Precondition(format!(
                    "class index out of range for {target}"
                )));
            }
            confusion[t][p] += 1;
        }
        Metrics::from_confusion(target, confusion)
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum()
    }

    pub fn class_total(&self, class: usize) -> usize {
        self.confusion[class].iter().sum()
    }

    /// `class,n,correct,accuracy` with `n/a` for absent classes.
    pub fn per_class_csv(&self) -> String {
        let mut out = String::from("class,n,correct,accuracy\n");
        for (i, acc) in self.per_class_accuracy.iter().enumerate() {
            let class = self.target.class_at(i).expect("index in range");
            let acc = acc.map_or("n/a".to_string(), |a| format!("{a:.6}"));
            let _ = writeln!(
                out,
                "{},{},{},{}",
                class.name(),
                self.class_total(i),
                self.confusion[i][i],
                acc
            );
        }
        out
    }

    /// Header row of predicted class names, one row per true class.
    pub fn confusion_csv(&self) -> String {
        let names: Vec<&str> = self.target.classes().iter().map(|c| c.name()).collect();
        let mut out = format!("true\\predicted,{}\n", names.join(","));
        for (i, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{},{}", names[i], cells.join(","));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "target: {}  n_test: {}  accuracy: {:.4}\n{:<12} {:>6} {:>8} {:>9}\n",
            self.target, self.n_test, self.overall_accuracy, "class", "n", "correct", "accuracy"
        );
        for (i, acc) in self.per_class_accuracy.iter().enumerate() {
            let class = self.target.class_at(i).expect("index in range");
            let acc = acc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>8} {:>9}",
                class.canonical(),
                self.class_total(i),
                self.confusion[i][i],
                acc
            );
        }
        out
    }
}

pub fn evaluate(
    model: &dyn Classifier,
    test: &Corpus,
    target: Target,
) -> Result<Metrics, EvalError> {
    evaluate_with(model, test, target, Execution::default())
}

pub fn evaluate_with(
    model: &dyn Classifier,
    test: &Corpus,
    target: Target,
    exec: Execution,
) -> Result<Metrics, EvalError> {
    if model.target() != target {
        return Err(EvalError::Precondition(format!(
            "model predicts {} but evaluation target is {target}",
            model.target()
        )));
    }
    if test.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    test.require_labels(target)?;
    let mut truth = Vec::with_capacity(test.len());
    for s in test.samples() {
        let label = s.label(target).expect("checked above");
        let index = target.index_of(label).ok_or_else(|| {
            EvalError::Precondition(format!(
                "sample {:?}: {label} is not a {target} class",
                s.id
            ))
        })?;
        truth.push(index);
    }
    let predicted = exec.map(test.samples(), |s| model.classify(s));
    Metrics::from_pairs(target, truth.into_iter().zip(predicted))
}

/// Knobs shared by every train/evaluate protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub test_fraction: f64,
    pub vocab_cap: usize,
    pub dead_code_elimination: bool,
    pub execution: Execution,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            test_fraction: 0.2,
            vocab_cap: 5000,
            dead_code_elimination: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seeds: Vec<u64>,
    pub runs: Vec<Metrics>,
    pub mean: f64,
    /// Sample standard deviation; absent for a single run.
    pub std: Option<f64>,
    /// Mean non-comment token count of the preprocessed corpus.
    pub mean_tokens: f64,
    pub fingerprint: String,
}

impl RunSummary {
    fn from_runs(
        seeds: Vec<u64>,
        runs: Vec<Metrics>,
        mean_tokens: f64,
        fingerprint: String,
    ) -> RunSummary {
        let accs: Vec<f64> = runs.iter().map(|m| m.overall_accuracy).collect();
        let (mean, std) = mean_std(&accs);
        RunSummary {
            seeds,
            runs,
            mean,
            std,
            mean_tokens,
            fingerprint,
        }
    }

    /// `seed,accuracy,n_test` per run.
    pub fn runs_csv(&self) -> String {
        let mut out = String::from("seed,accuracy,n_test\n");
        for (seed, m) in self.seeds.iter().zip(&self.runs) {
            let _ = writeln!(out, "{seed},{:.6},{}", m.overall_accuracy, m.n_test);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (seed, m) in self.seeds.iter().zip(&self.runs) {
            let _ = writeln!(
                out,
                "seed {seed}: accuracy {:.4} (n_test {})",
                m.overall_accuracy, m.n_test
            );
        }
        let _ = writeln!(out, "mean {:.4}  std {}", self.mean, fmt_opt(self.std));
        out
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("n/a".to_string(), |v| format!("{v:.4}"))
}

/// Mean and sample standard deviation (`None` below two values).
pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.len() > 1)
        .then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

fn token_count(s: &CodeSample) -> usize {
    tokenize(&s.source, &s.language)
        .iter()
        .filter(|t| t.kind != TokenKind::Comment)
        .count()
}

/// Applies the protocol's preprocessing to a whole corpus.
pub fn preprocess(corpus: &Corpus, protocol: &Protocol) -> Result<Corpus, EvalError> {
    if !protocol.dead_code_elimination {
        return Ok(corpus.clone());
    }
    let samples = protocol.execution.map(corpus.samples(), |s| CodeSample {
        source: eliminate_dead_code(&s.source, &s.language).0,
        ..s.clone()
    });
    Ok(Corpus::new(samples)?)
}

fn protocol_fingerprint(config: &ClassifierConfig, protocol: &Protocol, n_runs: usize) -> String {
    let mut pairs = config.to_pairs();
    pairs.push(("n_runs".into(), n_runs.to_string()));
    pairs.push(("test_fraction".into(), protocol.test_fraction.to_string()));
    pairs.push(("vocab_cap".into(), protocol.vocab_cap.to_string()));
    pairs.push(("dce".into(), protocol.dead_code_elimination.to_string()));
    fingerprint(pairs)
}

/// One split + train + evaluate with both split and init seeded by `seed`.
pub fn single_run(
    config: &ClassifierConfig,
    corpus: &Corpus,
    seed: u64,
    protocol: &Protocol,
) -> Result<Metrics, EvalError> {
    let split = stratified_split(corpus, protocol.test_fraction, config.target, seed)?;
    let vocab = build_vocab(&[&split.train], protocol.vocab_cap)?;
    let cfg = ClassifierConfig {
        seed,
        ..config.clone()
    };
    let opts = TrainOptions {
        execution: protocol.execution,
    };
    let model = train_with(&split.train, &cfg, &vocab, &opts)?.model;
    evaluate_with(&model, &split.test, config.target, protocol.execution)
}

/// Seeds `0..n_runs`, re-splitting per seed. Runs may execute concurrently;
/// results are ordered by seed.
pub fn multi_run(
    config: &ClassifierConfig,
    corpus: &Corpus,
    n_runs: usize,
) -> Result<RunSummary, EvalError> {
    multi_run_with(config, corpus, n_runs, &Protocol::default())
}

pub fn multi_run_with(
    config: &ClassifierConfig,
    corpus: &Corpus,
    n_runs: usize,
    protocol: &Protocol,
) -> Result<RunSummary, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::Precondition("n_runs must be at least 1".into()));
    }
    config.validate()?;
    let corpus = preprocess(corpus, protocol)?;
    let mean_tokens = protocol
        .execution
        .map(corpus.samples(), token_count)
        .iter()
        .sum::<usize>() as f64
        / corpus.len().max(1) as f64;
    let results = protocol.execution.map_range(0..n_runs, |seed| {
        single_run(config, &corpus, seed as u64, protocol)
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(RunSummary::from_runs(
        (0..n_runs as u64).collect(),
        runs,
        mean_tokens,
        protocol_fingerprint(config, protocol, n_runs),
    ))
}

/// One multi-run per sequence length, everything else fixed.
pub fn seq_length_ablation(
    config: &ClassifierConfig,
    corpus: &Corpus,
    lengths: &[usize],
    n_runs: usize,
    protocol: &Protocol,
) -> Result<Vec<(usize, RunSummary)>, EvalError> {
    if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::Precondition(
            "lengths must be non-empty and strictly ascending".into(),
        ));
    }
    lengths
        .iter()
        .map(|&len| {
            let cfg = ClassifierConfig {
                max_len: len,
                ..config.clone()
            };
            multi_run_with(&cfg, corpus, n_runs, protocol).map(|s| (len, s))
        })
        .collect()
}

/// `max_len,mean,std` rows.
pub fn seq_length_csv(rows: &[(usize, RunSummary)]) -> String {
    let mut out = String::from("max_len,mean,std\n");
    for (len, s) in rows {
        let std = s.std.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(out, "{len},{:.6},{std}", s.mean);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DceAblation {
    pub with_dce: RunSummary,
    pub without_dce: RunSummary,
}

impl DceAblation {
    /// `arm,mean,std,mean_tokens` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arm,mean,std,mean_tokens\n");
        for (arm, s) in [
            ("with_dce", &self.with_dce),
            ("without_dce", &self.without_dce),
        ] {
            let std = s.std.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "{arm},{:.6},{std},{:.2}", s.mean, s.mean_tokens);
        }
        out
    }
}

/// The same pipeline twice with identical seeds, toggling dead-code
/// elimination in preprocessing.
pub fn dce_ablation(
    config: &ClassifierConfig,
    corpus: &Corpus,
    n_runs: usize,
    protocol: &Protocol,
) -> Result<DceAblation, EvalError> {
    let with = Protocol {
        dead_code_elimination: true,
        ..*protocol
    };
    let without = Protocol {
        dead_code_elimination: false,
        ..*protocol
    };
    Ok(DceAblation {
        with_dce: multi_run_with(config, corpus, n_runs, &with)?,
        without_dce: multi_run_with(config, corpus, n_runs, &without)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossLanguageReport {
    pub metrics: Metrics,
    pub train_languages: Vec<Language>,
    pub test_languages: Vec<Language>,
    /// Accuracy of uniform guessing, `1 / num_classes`.
    pub random_baseline: f64,
}

impl CrossLanguageReport {
    pub fn to_table(&self) -> String {
        let tags = |ls: &[Language]| {
            ls.iter()
                .map(|l| l.tag().to_string())
                .collect::<Vec<_>>()
                .join("+")
        };
        format!(
            "train: {}  test: {}  accuracy: {:.4}  random baseline: {:.4}\n{}",
            tags(&self.train_languages),
            tags(&self.test_languages),
            self.metrics.overall_accuracy,
            self.random_baseline,
            self.metrics.to_table()
        )
    }
}

/// Evaluates a trained model on a corpus in languages it never saw. The
/// model is only borrowed immutably.
pub fn cross_language_eval(
    model: &ClassifierModel,
    corpus: &Corpus,
    target: Target,
) -> Result<CrossLanguageReport, EvalError> {
    if model.config().target != target {
        return Err(EvalError::Precondition(format!(
            "model was trained for {} labels, corpus evaluated on {target}",
            model.config().target
        )));
    }
    let mut test_languages: Vec<Language> = corpus
        .samples()
        .iter()
        .map(|s| s.language.clone())
        .collect();
    test_languages.sort();
    test_languages.dedup();
    if let Some(shared) = test_languages
        .iter()
        .find(|l| model.languages().contains(l))
    {
        return Err(EvalError::Precondition(format!(
            "evaluation language {shared} was also a training language"
        )));
    }
    let metrics = evaluate(model, corpus, target)?;
    Ok(CrossLanguageReport {
        metrics,
        train_languages: model.languages().to_vec(),
        test_languages,
        random_baseline: 1.0 / target.num_classes() as f64,
    })
}

/// Always predicts one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantPredictor {
    pub target: Target,
    pub class: ComplexityClass,
}

impl ConstantPredictor {
    /// Predicts the most frequent label (lowest class index on ties).
    pub fn majority(corpus: &Corpus, target: Target) -> Result<ConstantPredictor, EvalError> {
        let mut counts = vec![0usize; target.num_classes()];
        for (_, c) in corpus.labelled(target) {
            if let Some(i) = target.index_of(c) {
                counts[i] += 1;
            }
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(EvalError::EmptyTest);
        }
        let best = (0..counts.len()).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
        Ok(ConstantPredictor {
            target,
            class: target.class_at(best).expect("in range"),
        })
    }
}

impl Classifier for ConstantPredictor {
    fn target(&self) -> Target {
        self.target
    }

    fn classify(&self, _: &CodeSample) -> usize {
        self.target
            .index_of(self.class)
            .expect("class belongs to target")
    }
}

/// Uniform guessing, reproducible per `(seed, sample id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformRandomPredictor {
    pub target: Target,
    pub seed: u64,
}

impl Classifier for UniformRandomPredictor {
    fn target(&self) -> Target {
        self.target
    }

    fn classify(&self, sample: &CodeSample) -> usize {
        // FNV-1a over the id, then a SplitMix64 finalizer with the seed.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in sample.id.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
        }
        let mut z = h ^ self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z % self.target.num_classes() as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_arithmetic() {
        // Embed the 2-class toy into the 7-class matrix; other classes absent.
        let mut conf = vec![vec![0; 7]; 7];
        conf[0][0] = 3;
        conf[0][1] = 1;
        conf[1][0] = 2;
        conf[1][1] = 4;
        let m = Metrics::from_confusion(Target::Time, conf).unwrap();
        assert_eq!(m.n_test, 10);
        assert!((m.overall_accuracy - 0.7).abs() < 1e-12);
        assert_eq!(m.per_class_accuracy[0], Some(0.75));
        assert!((m.per_class_accuracy[1].unwrap() - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(m.per_class_accuracy[2], None);
        assert!(
            m.per_class_csv().contains("quadratic,0,0,n/a")
                || m.per_class_csv().contains(",0,0,n/a")
        );
    }

    #[test]
    fn perfect_predictor_is_diagonal() {
        let m = Metrics::from_pairs(Target::Space, (0..6).flat_map(|c| [(c, c), (c, c)])).unwrap();
        assert_eq!(m.overall_accuracy, 1.0);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m.confusion[i][j], if i == j { 2 } else { 0 });
            }
        }
    }

    #[test]
    fn empty_and_out_of_range() {
        assert!(matches!(
            Metrics::from_pairs(Target::Time, []),
            Err(EvalError::EmptyTest)
        ));
        assert!(Metrics::from_pairs(Target::Space, [(6, 0)]).is_err());
    }

    #[test]
    fn mean_std_single_and_many() {
        assert_eq!(mean_std(&[0.5]), (0.5, None));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, Some(1.0));
    }

    #[test]
    fn random_predictor_is_reproducible() {
        let p = UniformRandomPredictor {
            target: Target::Time,
            seed: 4,
        };
        let s = CodeSample::new("abc", Language::Cpp, "x");
        assert_eq!(p.classify(&s), p.classify(&s));
        assert!(p.classify(&s) < 7);
    }
}
