//! Parameters, forward pass and hand-written backward pass.
//!
//! Only the real (non-PAD) prefix of a sequence is ever computed, which
//! is equivalent to masking PAD keys and queries but makes predictions
//! bitwise independent of how much padding follows.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{ClassifierConfig, POSITION_CAPACITY};

/// All trainable tensors, stored as matrices (vectors are `1 × n`).
///
/// Layout: token embedding, positional embedding, four projections per
/// attention layer (q, k, v, o), pooling query (`1 × d`), then weight and
/// bias for each hidden FFNN layer and for the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub(crate) tensors: Vec<Array2<f64>>,
    pub(crate) layers: usize,
    pub(crate) hidden: usize,
}

const TOK: usize = 0;
const POS: usize = 1;

impl Params {
    pub(crate) fn init(cfg: &ClassifierConfig, vocab_size: usize) -> Params {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d = cfg.embed_dim;
        let mut normal = |rows: usize, cols: usize, std: f64| {
            let dist = Normal::new(0.0, std).expect("positive std");
            Array2::from_shape_simple_fn((rows, cols), || dist.sample(&mut rng))
        };
        let mut tensors = vec![
            normal(vocab_size, d, 1.0 / (d as f64).sqrt()),
            normal(POSITION_CAPACITY, d, 0.5 / (d as f64).sqrt()),
        ];
        for _ in 0..cfg.num_attention_layers {
            for _ in 0..4 {
                tensors.push(normal(d, d, 1.0 / (d as f64).sqrt()));
            }
        }
        tensors.push(Array2::zeros((1, d)));
        let mut fan_in = d;
        for &width in &cfg.ffnn_hidden_dims {
            tensors.push(normal(fan_in, width, (2.0 / fan_in as f64).sqrt()));
            tensors.push(Array2::zeros((1, width)));
            fan_in = width;
        }
        tensors.push(normal(
            fan_in,
            cfg.num_classes,
            (1.0 / fan_in as f64).sqrt(),
        ));
        tensors.push(Array2::zeros((1, cfg.num_classes)));
        Params {
            tensors,
            layers: cfg.num_attention_layers,
            hidden: cfg.ffnn_hidden_dims.len(),
        }
    }

    pub(crate) fn zeros_like(&self) -> Params {
        Params {
            tensors: self
                .tensors
                .iter()
                .map(|t| Array2::zeros(t.raw_dim()))
                .collect(),
            layers: self.layers,
            hidden: self.hidden,
        }
    }

    /// Rebuilds parameters from named tensors in layout order.
    pub(crate) fn from_tensors(tensors: Vec<Array2<f64>>, layers: usize, hidden: usize) -> Params {
        Params {
            tensors,
            layers,
            hidden,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["tok_emb".to_string(), "pos_emb".to_string()];
        for l in 0..self.layers {
            for p in ["wq", "wk", "wv", "wo"] {
                names.push(format!("attn{l}.{p}"));
            }
        }
        names.push("pool.query".to_string());
        for h in 0..self.hidden {
            names.push(format!("ffnn{h}.w"));
            names.push(format!("ffnn{h}.b"));
        }
        names.push("out.w".to_string());
        names.push("out.b".to_string());
        names
    }

    pub fn tensors(&self) -> &[Array2<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.tensors
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    fn attn(&self, layer: usize, which: usize) -> ArrayView2<'_, f64> {
        self.tensors[2 + 4 * layer + which].view()
    }

    fn pool_index(&self) -> usize {
        2 + 4 * self.layers
    }

    fn dense_index(&self, i: usize) -> usize {
        self.pool_index() + 1 + 2 * i
    }

    /// Weight and bias of FFNN layer `i`; `i == hidden` is the output layer.
    fn dense(&self, i: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let k = self.dense_index(i);
        (self.tensors[k].view(), self.tensors[k + 1].row(0))
    }

    pub(crate) fn vocab_rows(&self) -> usize {
        self.tensors[TOK].nrows()
    }

    pub(crate) fn embed_dim(&self) -> usize {
        self.tensors[TOK].ncols()
    }

    pub(crate) fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            *a += b;
        }
    }
}

/// Intermediate values of one forward pass, kept for backprop.
pub(crate) struct Forward {
    ids: Vec<usize>,
    /// Input of each attention layer plus the final representation.
    xs: Vec<Array2<f64>>,
    qkv: Vec<[Array2<f64>; 3]>,
    probs: Vec<Vec<Array2<f64>>>,
    concat: Vec<Array2<f64>>,
    alpha: Array1<f64>,
    pooled: Array1<f64>,
    pre: Vec<Array1<f64>>,
    post: Vec<Array1<f64>>,
    pub logits: Array1<f64>,
}

impl Forward {
    /// Final token representations (`len × d`).
    pub(crate) fn hidden_states(&self) -> ArrayView2<'_, f64> {
        self.xs.last().expect("at least the embedding layer").view()
    }
}

pub(crate) fn softmax(v: ArrayView1<f64>) -> Array1<f64> {
    let max = v.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let e = v.mapv(|x| (x - max).exp());
    let sum = e.sum();
    e / sum
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &x| a.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn relu(v: Array1<f64>) -> Array1<f64> {
    v.mapv_into(|x| x.max(0.0))
}

pub(crate) fn forward(p: &Params, ids: &[u32], num_heads: usize) -> Forward {
    let d = p.embed_dim();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let unk = crate::normalize::UNK_ID as usize;
    let ids: Vec<usize> = ids
        .iter()
        .map(|&i| {
            if (i as usize) < p.vocab_rows() {
                i as usize
            } else {
                unk
            }
        })
        .collect();
    let len = ids.len();
    let mut x = Array2::zeros((len, d));
    for (t, &id) in ids.iter().enumerate() {
        let mut row = x.row_mut(t);
        row.assign(&p.tensors[TOK].row(id));
        row += &p.tensors[POS].row(t);
    }
    let mut xs = vec![x];
    let mut qkv = Vec::with_capacity(p.layers);
    let mut probs = Vec::with_capacity(p.layers);
    let mut concat = Vec::with_capacity(p.layers);
    for l in 0..p.layers {
        let x = xs.last().unwrap();
        let q = x.dot(&p.attn(l, 0));
        let k = x.dot(&p.attn(l, 1));
        let v = x.dot(&p.attn(l, 2));
        let mut o = Array2::zeros((len, d));
        let mut head_probs = Vec::with_capacity(num_heads);
        for h in 0..num_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut a = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            softmax_rows(&mut a);
            o.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
            head_probs.push(a);
        }
        let next = x + &o.dot(&p.attn(l, 3));
        qkv.push([q, k, v]);
        probs.push(head_probs);
        concat.push(o);
        xs.push(next);
    }
    let hfinal = xs.last().unwrap();
    let query = p.tensors[p.pool_index()].row(0);
    let scores = hfinal.dot(&query) / (d as f64).sqrt();
    let alpha = softmax(scores.view());
    let pooled = hfinal.t().dot(&alpha);

    let mut pre = Vec::with_capacity(p.hidden);
    let mut post = Vec::with_capacity(p.hidden);
    let mut a = pooled.clone();
    for i in 0..p.hidden {
        let (w, b) = p.dense(i);
        let z = a.dot(&w) + b;
        a = relu(z.clone());
        pre.push(z);
        post.push(a.clone());
    }
    let (w, b) = p.dense(p.hidden);
    let logits = a.dot(&w) + b;
    Forward {
        ids,
        xs,
        qkv,
        probs,
        concat,
        alpha,
        pooled,
        pre,
        post,
        logits,
    }
}

/// Runs the FFNN hidden layers position-wise on each token's final
/// representation, returning one `len × width` matrix per hidden layer.
pub(crate) fn token_activations(p: &Params, fwd: &Forward) -> Vec<Array2<f64>> {
    let mut a = fwd.hidden_states().to_owned();
    let mut out = Vec::with_capacity(p.hidden);
    for i in 0..p.hidden {
        let (w, b) = p.dense(i);
        let mut z = a.dot(&w);
        z += &b;
        z.mapv_inplace(|x| x.max(0.0));
        out.push(z.clone());
        a = z;
    }
    out
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let a2 = a.insert_axis(Axis(1));
    let b2 = b.insert_axis(Axis(0));
    a2.dot(&b2)
}

/// Cross-entropy loss of one sample and its gradient, added into `grad`.
pub(crate) fn backward(
    p: &Params,
    fwd: &Forward,
    label: usize,
    num_heads: usize,
    grad: &mut Params,
) -> f64 {
    let d = p.embed_dim();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let probs = softmax(fwd.logits.view());
    let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
    let mut dz = probs;
    dz[label] -= 1.0;

    // Classification head, output layer first.
    let mut layer = p.hidden;
    loop {
        let input = if layer == 0 {
            fwd.pooled.view()
        } else {
            fwd.post[layer - 1].view()
        };
        let k = p.dense_index(layer);
        grad.tensors[k] += &outer(input, dz.view());
        let mut b = grad.tensors[k + 1].row_mut(0);
        b += &dz;
        let da = p.tensors[k].dot(&dz);
        if layer == 0 {
            dz = da;
            break;
        }
        layer -= 1;
        dz = da;
        Zip::from(&mut dz).and(&fwd.pre[layer]).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        });
    }
    let dpooled = dz;

    // Attention pooling: pooled = Σ α_t h_t, α = softmax(H q / √d).
    let h = fwd.hidden_states();
    let mut dx = outer(fwd.alpha.view(), dpooled.view());
    let dalpha = h.dot(&dpooled);
    let dot = fwd.alpha.dot(&dalpha);
    let dscores = (&dalpha - dot) * &fwd.alpha / (d as f64).sqrt();
    let query = p.tensors[p.pool_index()].row(0);
    dx += &outer(dscores.view(), query);
    let mut gq = grad.tensors[p.pool_index()].row_mut(0);
    gq += &h.t().dot(&dscores);

    for l in (0..p.layers).rev() {
        let x = &fwd.xs[l];
        let [q, k, v] = &fwd.qkv[l];
        let base = 2 + 4 * l;
        grad.tensors[base + 3] += &fwd.concat[l].t().dot(&dx);
        let dconcat = dx.dot(&p.attn(l, 3).t());
        let len = x.nrows();
        let mut dq = Array2::zeros((len, d));
        let mut dk = Array2::zeros((len, d));
        let mut dv = Array2::zeros((len, d));
        for hd in 0..num_heads {
            let cols = s![.., hd * dh..(hd + 1) * dh];
            let a = &fwd.probs[l][hd];
            let dout = dconcat.slice(cols);
            let da = dout.dot(&v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dout));
            let rowdot = (&da * a).sum_axis(Axis(1)).insert_axis(Axis(1));
            let ds = (&da - &rowdot) * a * scale;
            dq.slice_mut(cols).assign(&ds.dot(&k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&q.slice(cols)));
        }
        grad.tensors[base] += &x.t().dot(&dq);
        grad.tensors[base + 1] += &x.t().dot(&dk);
        grad.tensors[base + 2] += &x.t().dot(&dv);
        // Residual path plus the three projections.
        dx = dx + dq.dot(&p.attn(l, 0).t()) + dk.dot(&p.attn(l, 1).t()) + dv.dot(&p.attn(l, 2).t());
    }

    for (t, &id) in fwd.ids.iter().enumerate() {
        let mut row = grad.tensors[TOK].row_mut(id);
        row += &dx.row(t);
        let mut row = grad.tensors[POS].row_mut(t);
        row += &dx.row(t);
    }
    loss
}
