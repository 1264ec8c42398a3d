//! Parts-based explanations: NMF over classification-head activations and
//! static HTML token reports.

mod nmf;
mod report;

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::corpus::CodeSample;
use crate::model::ClassifierModel;

pub use nmf::{matrix_csv, nmf, NmfFactors, DEFAULT_MAX_ITERS, DEFAULT_TOL, NMF_EPS};
pub use report::{render_report, write_report, ReportMeta, MIN_OPACITY, TOP_TOKENS};

#[derive(Debug, thiserror::Error)]
pub enum InterpretError {
    #[error("layer range {first}:{last} outside the head's {layers} hidden layers")]
    LayerRange {
        first: usize,
        last: usize,
        layers: usize,
    },
    #[error("k = {k} must lie in 1..={} for a {rows}x{cols} matrix", rows.min(cols))]
    BadRank { k: usize, rows: usize, cols: usize },
    #[error("matrix has no positive entry")]
    AllZero,
    #[error("matrix has negative or non-finite entries")]
    Negative,
    #[error("W has {rows} rows but {tokens} tokens were given")]
    ShapeMismatch { rows: usize, tokens: usize },
    #[error("cannot write {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Token × neuron activations over a contiguous range of head layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    pub values: Array2<f64>,
    pub token_lexemes: Vec<String>,
    /// Inclusive, 0-based hidden-layer indices.
    pub layer_range: (usize, usize),
}

impl ActivationMatrix {
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }
}

/// Parses `a:b` (or a single index `a`) into an inclusive layer range.
pub fn parse_layer_range(text: &str) -> Option<(usize, usize)> {
    match text.split_once(':') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => {
            let a = text.trim().parse().ok()?;
            Some((a, a))
        }
    }
}

/// Hidden activations of head layers `first..=last` for every real token
/// position of `sample`, concatenated along the neuron axis.
pub fn collect_activations(
    model: &ClassifierModel,
    sample: &CodeSample,
    layer_range: (usize, usize),
) -> Result<ActivationMatrix, InterpretError> {
    let (first, last) = layer_range;
    let layers = model.hidden_widths().len();
    if first > last || last >= layers {
        return Err(InterpretError::LayerRange {
            first,
            last,
            layers,
        });
    }
    let trace = model
        .predict(sample, true)
        .activation_trace
        .expect("trace requested");
    let views: Vec<ArrayView2<f64>> = trace.layers[first..=last]
        .iter()
        .map(|m| m.view())
        .collect();
    let values = concatenate(Axis(1), &views).expect("equal row counts");
    Ok(ActivationMatrix {
        values,
        token_lexemes: trace.lexemes,
        layer_range,
    })
}
