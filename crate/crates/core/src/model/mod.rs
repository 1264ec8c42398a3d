//! The attention classifier, its training loop and checkpoints, plus the
//! engineered-feature logistic-regression baseline.

mod baseline;
mod checkpoint;
mod config;
mod network;
mod train;

use ndarray::Array2;

use crate::corpus::{CodeSample, ComplexityClass, Language, Target};
use crate::normalize::{encode, TokenSequence, Vocabulary};
use crate::par::Execution;

pub use baseline::{train_feature_baseline, BaselineModel};
pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{ClassifierConfig, POSITION_CAPACITY};
pub use network::Params;
pub use train::{train, train_with, EpochStats, TrainOptions, TrainOutcome};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyTrainCorpus,
    #[error("sample {id:?}: {reason}")]
    BadLabel { id: String, reason: String },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ModelError {
    pub fn is_precondition(&self) -> bool {
        !matches!(self, ModelError::Io { .. })
    }
}

/// Hidden-layer activations of the classification head, one row per real
/// token position.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub lexemes: Vec<String>,
    /// One `tokens × width` matrix per hidden FFNN layer.
    pub layers: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: ComplexityClass,
    pub class_index: usize,
    pub probabilities: Vec<f64>,
    pub activation_trace: Option<ActivationTrace>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that assigns a class index to a sample.
pub trait Classifier: Sync {
    fn target(&self) -> Target;
    fn classify(&self, sample: &CodeSample) -> usize;
}

/// A trained attention classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub(crate) config: ClassifierConfig,
    pub(crate) vocab: Vocabulary,
    pub(crate) languages: Vec<Language>,
    pub(crate) params: Params,
}

impl ClassifierModel {
    /// Untrained model with seeded initial weights.
    pub fn initialize(config: &ClassifierConfig, vocab: &Vocabulary) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(ClassifierModel {
            config: config.clone(),
            vocab: vocab.clone(),
            languages: Vec::new(),
            params: Params::init(config, vocab.len()),
        })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Languages seen during training.
    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.config.ffnn_hidden_dims
    }

    pub fn encode(&self, sample: &CodeSample) -> TokenSequence {
        encode(
            &sample.source,
            &sample.language,
            &self.vocab,
            self.config.max_len,
        )
    }

    pub fn logits(&self, seq: &TokenSequence) -> Vec<f64> {
        network::forward(&self.params, seq.real_ids(), self.config.num_heads)
            .logits
            .to_vec()
    }

    pub fn predict_sequence(&self, seq: &TokenSequence, trace: bool) -> Prediction {
        let fwd = network::forward(&self.params, seq.real_ids(), self.config.num_heads);
        let probabilities = network::softmax(fwd.logits.view()).to_vec();
        let class_index = argmax(&probabilities);
        let activation_trace = trace.then(|| ActivationTrace {
            lexemes: seq.lexemes.clone(),
            layers: network::token_activations(&self.params, &fwd),
        });
        Prediction {
            class: self
                .config
                .target
                .class_at(class_index)
                .expect("logit count matches target"),
            class_index,
            probabilities,
            activation_trace,
        }
    }

    pub fn predict(&self, sample: &CodeSample, trace: bool) -> Prediction {
        self.predict_sequence(&self.encode(sample), trace)
    }

    pub fn predict_batch(&self, samples: &[CodeSample], exec: Execution) -> Vec<Prediction> {
        exec.map(samples, |s| self.predict(s, false))
    }

    /// Mean cross-entropy and summed gradient over `(ids, label)` pairs.
    pub fn loss_and_gradient(&self, batch: &[(Vec<u32>, usize)]) -> (f64, Params) {
        let mut grad = self.params.zeros_like();
        let mut loss = 0.0;
        for (ids, label) in batch {
            let fwd = network::forward(&self.params, ids, self.config.num_heads);
            loss += network::backward(&self.params, &fwd, *label, self.config.num_heads, &mut grad);
        }
        (loss, grad)
    }

    /// Cross-entropy of one sequence without computing gradients.
    pub fn loss(&self, ids: &[u32], label: usize) -> f64 {
        let fwd = network::forward(&self.params, ids, self.config.num_heads);
        -network::softmax(fwd.logits.view())[label].ln()
    }

    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }
}

impl Classifier for ClassifierModel {
    fn target(&self) -> Target {
        self.config.target
    }

    fn classify(&self, sample: &CodeSample) -> usize {
        self.predict(sample, false).class_index
    }
}
