use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Language};
use crate::normalize::{encode, Vocabulary};
use crate::par::Execution;

use super::network::{backward, forward, Params};
use super::{argmax, ClassifierConfig, ClassifierModel, ModelError};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    pub execution: Execution,
}

/// Running statistics of one epoch (computed before each batch update).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub history: Vec<EpochStats>,
}

impl TrainOutcome {
    /// `epoch,loss,train_acc` rows with header.
    pub fn loss_log_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_acc\n");
        for e in &self.history {
            out.push_str(&format!(
                "{},{:.6},{:.6}\n",
                e.epoch, e.loss, e.train_accuracy
            ));
        }
        out
    }
}

struct Adam {
    m: Params,
    v: Params,
    step: i32,
}

impl Adam {
    fn new(p: &Params) -> Self {
        Adam {
            m: p.zeros_like(),
            v: p.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Params, grad: &Params, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        let tensors = params
            .tensors
            .iter_mut()
            .zip(&mut self.m.tensors)
            .zip(&mut self.v.tensors);
        for (((p, m), v), g) in tensors.zip(&grad.tensors) {
            ndarray::Zip::from(p)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                });
        }
    }
}

pub(crate) fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // SplitMix64 finalizer over the pair.
    let mut z = seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains with default options and returns only the model.
pub fn train(
    corpus: &Corpus,
    config: &ClassifierConfig,
    vocab: &Vocabulary,
) -> Result<ClassifierModel, ModelError> {
    train_with(corpus, config, vocab, &TrainOptions::default()).map(|o| o.model)
}

/// Adam on softmax cross-entropy with gradient accumulation.
///
/// Per-sample gradients may be computed in parallel but are always summed
/// in batch order, so the result is bitwise identical for every
/// [`Execution`] mode.
pub fn train_with(
    corpus: &Corpus,
    config: &ClassifierConfig,
    vocab: &Vocabulary,
    opts: &TrainOptions,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(ModelError::EmptyTrainCorpus);
    }
    let target = config.target;
    let mut data = Vec::with_capacity(corpus.len());
    for s in corpus.samples() {
        let label = s.label(target).ok_or_else(|| ModelError::BadLabel {
            id: s.id.clone(),
            reason: format!("missing {target} label"),
        })?;
        let index = target.index_of(label).ok_or_else(|| ModelError::BadLabel {
            id: s.id.clone(),
            reason: format!("label {label} is not a {target} class"),
        })?;
        let seq = encode(&s.source, &s.language, vocab, config.max_len);
        data.push((seq.real_ids().to_vec(), index));
    }
    let mut model = ClassifierModel::initialize(config, vocab)?;
    let mut languages: Vec<Language> = corpus
        .samples()
        .iter()
        .map(|s| s.language.clone())
        .collect();
    languages.sort();
    languages.dedup();
    model.languages = languages;

    let heads = config.num_heads;
    let mut adam = Adam::new(&model.params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed(
            config.seed,
            epoch,
        )));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.effective_batch()) {
            let params = &model.params;
            let per_sample = opts.execution.map(batch, |&i| {
                let (ids, label) = &data[i];
                let fwd = forward(params, ids, heads);
                let hit = argmax(fwd.logits.as_slice().expect("contiguous")) == *label;
                let mut g = params.zeros_like();
                let loss = backward(params, &fwd, *label, heads, &mut g);
                (loss, hit, g)
            });
            let mut total = params.zeros_like();
            for (loss, hit, g) in &per_sample {
                loss_sum += loss;
                correct += usize::from(*hit);
                total.add_assign(g);
            }
            let inv = 1.0 / batch.len() as f64;
            for t in total.tensors.iter_mut() {
                t.mapv_inplace(|x| x * inv);
            }
            adam.update(&mut model.params, &total, config.learning_rate);
        }
        let n = data.len() as f64;
        let stats = EpochStats {
            epoch,
            loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
        };
        log::debug!(
            "epoch {epoch}: loss {:.4} train acc {:.3}",
            stats.loss,
            stats.train_accuracy
        );
        history.push(stats);
    }
    Ok(TrainOutcome { model, history })
}
