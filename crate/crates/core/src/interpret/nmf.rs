//! Lee–Seung multiplicative updates for the Frobenius objective.

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::InterpretError;

/// Added to every update denominator.
pub const NMF_EPS: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfFactors {
    /// `rows × k`.
    pub w: Array2<f64>,
    /// `k × cols`.
    pub h: Array2<f64>,
    pub k: usize,
    pub iterations_used: usize,
    pub final_relative_error: f64,
    /// Relative error after initialization and after every iteration.
    pub error_history: Vec<f64>,
    pub seed: u64,
}

impl NmfFactors {
    pub fn reconstruction(&self) -> Array2<f64> {
        self.w.dot(&self.h)
    }
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_norm(v: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    frobenius(&(v - &w.dot(h)))
}

/// Factorizes non-negative `v ≈ w·h` with `k` components.
///
/// Stops after `max_iters` iterations or once the relative error improves
/// by less than `tol` in one iteration. Initial factors are uniform on
/// `(0, 1]` scaled by `sqrt(mean(v) / k)`, so the result is deterministic in
/// `seed` and scales linearly with `v`.
pub fn nmf(
    v: &Array2<f64>,
    k: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<NmfFactors, InterpretError> {
    let (rows, cols) = v.dim();
    if k == 0 || k > rows.min(cols) {
        return Err(InterpretError::BadRank { k, rows, cols });
    }
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(InterpretError::Negative);
    }
    if !v.iter().any(|&x| x > 0.0) {
        return Err(InterpretError::AllZero);
    }
    let norm_v = frobenius(v);
    let scale = (v.mean().expect("non-empty") / k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || scale * (1.0 - rng.random::<f64>());
    let mut w = Array2::from_shape_simple_fn((rows, k), &mut draw);
    let mut h = Array2::from_shape_simple_fn((k, cols), &mut draw);

    let mut history = vec![residual_norm(v, &w, &h) / norm_v];
    let mut iterations = 0;
    while iterations < max_iters {
        // H ← H ⊙ (WᵀV) / (WᵀWH + ε)
        let num = w.t().dot(v);
        let den = w.t().dot(&w).dot(&h);
        Zip::from(&mut h)
            .and(&num)
            .and(&den)
            .for_each(|h, &n, &d| *h *= n / (d + NMF_EPS));
        // W ← W ⊙ (VHᵀ) / (WHHᵀ + ε)
        let num = v.dot(&h.t());
        let den = w.dot(&h.dot(&h.t()));
        Zip::from(&mut w)
            .and(&num)
            .and(&den)
            .for_each(|w, &n, &d| *w *= n / (d + NMF_EPS));
        iterations += 1;
        let err = residual_norm(v, &w, &h) / norm_v;
        let prev = *history.last().expect("initial error recorded");
        history.push(err);
        if prev - err < tol {
            break;
        }
    }
    Ok(NmfFactors {
        w,
        h,
        k,
        iterations_used: iterations,
        final_relative_error: *history.last().expect("non-empty"),
        error_history: history,
        seed,
    })
}

/// Comma-separated matrix, fixed 6-decimal formatting, no header.
pub fn matrix_csv(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rank_one_is_recovered() {
        let w = array![[1.0], [2.0], [0.5], [3.0]];
        let h = array![[0.2, 1.0, 4.0]];
        let v = w.dot(&h);
        let f = nmf(&v, 1, 200, 1e-12, 1).unwrap();
        assert!(f.final_relative_error < 1e-3, "{}", f.final_relative_error);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let z = Array2::<f64>::zeros((3, 3));
        assert!(matches!(
            nmf(&z, 1, 10, 1e-4, 0),
            Err(InterpretError::AllZero)
        ));
        let v = Array2::<f64>::ones((3, 2));
        assert!(matches!(
            nmf(&v, 3, 10, 1e-4, 0),
            Err(InterpretError::BadRank { .. })
        ));
        assert!(matches!(
            nmf(&v, 0, 10, 1e-4, 0),
            Err(InterpretError::BadRank { .. })
        ));
        let neg = array![[1.0, -1.0]];
        assert!(matches!(
            nmf(&neg, 1, 10, 1e-4, 0),
            Err(InterpretError::Negative)
        ));
    }

    #[test]
    fn deterministic_and_non_negative() {
        let v = Array2::from_shape_fn((6, 5), |(i, j)| ((i * 7 + j * 3) % 5) as f64 + 0.5);
        let a = nmf(&v, 3, 50, 0.0, 9).unwrap();
        let b = nmf(&v, 3, 50, 0.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.w.iter().chain(a.h.iter()).all(|&x| x >= 0.0));
        assert_eq!(a.iterations_used, 50);
        assert_eq!(a.error_history.len(), 51);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            matrix_csv(&array![[1.0, 0.5], [0.0, 2.25]]),
            "1.000000,0.500000\n0.000000,2.250000\n"
        );
    }
}
