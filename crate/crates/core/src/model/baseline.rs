//! Multinomial logistic regression over engineered features.

// Per-feature arrays (mean, std, pinned, weights) are walked in lockstep.
#![allow(clippy::needless_range_loop)]

use crate::corpus::{CodeSample, Corpus, Target};
use crate::features::{features_of, FeatureVector, FEATURE_NAMES};

use super::{argmax, Classifier, ModelError};

const NF: usize = FEATURE_NAMES.len();
const MAX_ITERS: usize = 10_000;
const GRAD_TOL: f64 = 1e-6;
const STEP: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub target: Target,
    pub mean: [f64; NF],
    pub std: [f64; NF],
    /// Columns with zero variance; their weights stay at zero.
    pub pinned: [bool; NF],
    /// `weights[c][f]`.
    pub weights: Vec<[f64; NF]>,
    pub bias: Vec<f64>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub warnings: Vec<String>,
}

impl BaselineModel {
    fn standardize(&self, fv: &FeatureVector) -> [f64; NF] {
        let mut x = fv.values();
        for f in 0..NF {
            x[f] = if self.pinned[f] {
                0.0
            } else {
                (x[f] - self.mean[f]) / self.std[f]
            };
        }
        x
    }

    fn logits(&self, x: &[f64; NF]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn predict_features(&self, fv: &FeatureVector) -> usize {
        argmax(&self.logits(&self.standardize(fv)))
    }
}

impl Classifier for BaselineModel {
    fn target(&self) -> Target {
        self.target
    }

    fn classify(&self, sample: &CodeSample) -> usize {
        self.predict_features(&features_of(&sample.source, &sample.language))
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Full-batch gradient descent from zero weights until the gradient norm
/// drops below 1e-6 or 10 000 iterations pass. Zero initialization makes
/// the fit independent of `seed`, which is kept for interface symmetry with
/// the neural trainer.
pub fn train_feature_baseline(
    corpus: &Corpus,
    target: Target,
    seed: u64,
) -> Result<BaselineModel, ModelError> {
    let _ = seed;
    if corpus.is_empty() {
        return Err(ModelError::EmptyTrainCorpus);
    }
    let mut xs = Vec::with_capacity(corpus.len());
    let mut ys = Vec::with_capacity(corpus.len());
    for s in corpus.samples() {
        let label = s
            .label(target)
            .and_then(|l| target.index_of(l))
            .ok_or_else(|| ModelError::BadLabel {
                id: s.id.clone(),
                reason: format!("no usable {target} label"),
            })?;
        xs.push(features_of(&s.source, &s.language));
        ys.push(label);
    }
    let n = xs.len() as f64;
    let k = target.num_classes();
    let mut model = BaselineModel {
        target,
        mean: [0.0; NF],
        std: [1.0; NF],
        pinned: [false; NF],
        weights: vec![[0.0; NF]; k],
        bias: vec![0.0; k],
        iterations: 0,
        final_grad_norm: f64::INFINITY,
        warnings: Vec::new(),
    };
    for f in 0..NF {
        let mean = xs.iter().map(|x| x.values()[f]).sum::<f64>() / n;
        let var = xs
            .iter()
            .map(|x| (x.values()[f] - mean).powi(2))
            .sum::<f64>()
            / n;
        model.mean[f] = mean;
        if var > 0.0 {
            model.std[f] = var.sqrt();
        } else {
            model.pinned[f] = true;
            let msg = format!(
                "feature {} is constant; its weight is pinned to 0",
                FEATURE_NAMES[f]
            );
            log::warn!("{msg}");
            model.warnings.push(msg);
        }
    }
    let data: Vec<[f64; NF]> = xs.iter().map(|x| model.standardize(x)).collect();
    for it in 0..MAX_ITERS {
        let mut gw = vec![[0.0; NF]; k];
        let mut gb = vec![0.0; k];
        for (x, &y) in data.iter().zip(&ys) {
            let mut p = model.logits(x);
            softmax_in_place(&mut p);
            p[y] -= 1.0;
            for c in 0..k {
                gb[c] += p[c] / n;
                for f in 0..NF {
                    gw[c][f] += p[c] * x[f] / n;
                }
            }
        }
        let norm = gw
            .iter()
            .flatten()
            .chain(&gb)
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        model.iterations = it;
        model.final_grad_norm = norm;
        if norm < GRAD_TOL {
            break;
        }
        for c in 0..k {
            model.bias[c] -= STEP * gb[c];
            for f in 0..NF {
                if !model.pinned[f] {
                    model.weights[c][f] -= STEP * gw[c][f];
                }
            }
        }
    }
    Ok(model)
}
