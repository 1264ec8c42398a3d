use std::fmt;

use crate::corpus::ComplexityClass;

use super::{EmpiricalError, MeasurementSeries};

/// Growth functions tried by the fitter, slowest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Candidate {
    Constant,
    LogN,
    Linear,
    NLogN,
    Quadratic,
    Cubic,
    Exponential,
}

impl Candidate {
    pub const ALL: [Candidate; 7] = [
        Candidate::Constant,
        Candidate::LogN,
        Candidate::Linear,
        Candidate::NLogN,
        Candidate::Quadratic,
        Candidate::Cubic,
        Candidate::Exponential,
    ];

    /// `f(n)`, or `None` when it is not a finite number.
    pub fn eval(self, n: f64) -> Option<f64> {
        let v = match self {
            Candidate::Constant => 1.0,
            Candidate::LogN => n.ln(),
            Candidate::Linear => n,
            Candidate::NLogN => n * n.ln(),
            Candidate::Quadratic => n * n,
            Candidate::Cubic => n * n * n,
            Candidate::Exponential => n.exp2(),
        };
        v.is_finite().then_some(v)
    }

    pub fn class(self) -> ComplexityClass {
        match self {
            Candidate::Constant => ComplexityClass::Constant,
            Candidate::LogN => ComplexityClass::LogN,
            Candidate::Linear => ComplexityClass::Linear,
            Candidate::NLogN => ComplexityClass::NLogN,
            Candidate::Quadratic => ComplexityClass::Quadratic,
            Candidate::Cubic => ComplexityClass::Cubic,
            Candidate::Exponential => ComplexityClass::NpHard,
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Candidate::Constant => "1",
            Candidate::LogN => "log n",
            Candidate::Linear => "n",
            Candidate::NLogN => "n log n",
            Candidate::Quadratic => "n^2",
            Candidate::Cubic => "n^3",
            Candidate::Exponential => "2^n",
        }
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFit {
    pub candidate: Candidate,
    /// Slope, clamped to be non-negative.
    pub a: f64,
    pub b: f64,
    pub loo_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted candidates, slowest-growing first.
    pub fits: Vec<CandidateFit>,
    /// Candidates skipped because `f(n)` is not finite at some size.
    pub excluded: Vec<(Candidate, String)>,
    pub winner: Candidate,
    /// Runner-up LOO-MSE over winner LOO-MSE (infinite when the winner is
    /// exact, absent with a single fitted candidate).
    pub winner_margin: Option<f64>,
    /// Set when an exponential fit stands in for NP-hardness.
    pub empirical_proxy: bool,
}

impl FitResult {
    pub fn winner_class(&self) -> ComplexityClass {
        self.winner.class()
    }

    pub fn winner_fit(&self) -> &CandidateFit {
        self.fits
            .iter()
            .find(|f| f.candidate == self.winner)
            .expect("winner was fitted")
    }

    /// `candidate,a,b,loo_mse,winner` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate,a,b,loo_mse,winner\n");
        for f in &self.fits {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{}\n",
                f.candidate.class().name(),
                f.a,
                f.b,
                f.loo_mse,
                u8::from(f.candidate == self.winner)
            ));
        }
        for (c, _) in &self.excluded {
            out.push_str(&format!("{},,,,0\n", c.class().name()));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<10} {:>14} {:>14} {:>14}\n",
            "candidate", "a", "b", "loo_mse"
        );
        for f in &self.fits {
            let mark = if f.candidate == self.winner { " *" } else { "" };
            out.push_str(&format!(
                "{:<10} {:>14.6e} {:>14.6e} {:>14.6e}{mark}\n",
                f.candidate.formula(),
                f.a,
                f.b,
                f.loo_mse
            ));
        }
        for (c, note) in &self.excluded {
            out.push_str(&format!("{:<10} excluded: {note}\n", c.formula()));
        }
        let margin = self
            .winner_margin
            .map_or("n/a".to_string(), |m| format!("{m:.3}"));
        out.push_str(&format!(
            "winner: {} (margin {margin})",
            self.winner.class().canonical()
        ));
        if self.empirical_proxy {
            out.push_str(" [empirical proxy: exponential growth, not a hardness proof]");
        }
        out.push('\n');
        out
    }
}

/// Least squares `y ≈ a·x + b` with `a ≥ 0`; a flat `x` gives `a = 0`.
fn affine_fit(xs: &[f64], ys: &[f64], constant: bool) -> (f64, f64) {
    let n = ys.len() as f64;
    let my = ys.iter().sum::<f64>() / n;
    if constant {
        return (0.0, my);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return (0.0, my);
    }
    let a = sxy / sxx;
    if a < 0.0 {
        (0.0, my)
    } else {
        (a, my - a * mx)
    }
}

fn loo_mse(xs: &[f64], ys: &[f64], constant: bool) -> f64 {
    let mut total = 0.0;
    let mut rx = Vec::with_capacity(xs.len());
    let mut ry = Vec::with_capacity(ys.len());
    for i in 0..xs.len() {
        rx.clear();
        ry.clear();
        for j in (0..xs.len()).filter(|&j| j != i) {
            rx.push(xs[j]);
            ry.push(ys[j]);
        }
        let (a, b) = affine_fit(&rx, &ry, constant);
        let e = ys[i] - (a * xs[i] + b);
        total += e * e;
    }
    total / xs.len() as f64
}

/// Relative tolerance under which two LOO scores count as tied.
const TIE_TOL: f64 = 1e-12;

/// Fits every candidate to `(n, cost)` pairs. Sizes must be non-decreasing
/// with at least four distinct values; repeated sizes are allowed here, but
/// exact duplicate pairs carry no information and are collapsed first.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult, EmpiricalError> {
    if points.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(EmpiricalError::InvalidSeries(
            "sizes must be non-decreasing".into(),
        ));
    }
    let distinct = 1 + points.windows(2).filter(|w| w[0].0 != w[1].0).count();
    if points.is_empty() || distinct < super::MIN_POINTS {
        return Err(EmpiricalError::InvalidSeries(format!(
            "need at least {} distinct sizes",
            super::MIN_POINTS
        )));
    }
    if points.iter().any(|p| !(p.0 >= 1.0 && p.1.is_finite())) {
        return Err(EmpiricalError::InvalidSeries(
            "sizes must be ≥ 1 and costs finite".into(),
        ));
    }
    let mut unique = points.to_vec();
    unique.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    unique.dedup();
    let points = &unique[..];
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut fits = Vec::new();
    let mut excluded = Vec::new();
    for c in Candidate::ALL {
        let xs: Option<Vec<f64>> = points.iter().map(|p| c.eval(p.0)).collect();
        let Some(xs) = xs else {
            excluded.push((
                c,
                format!(
                    "{} overflows at n = {}",
                    c.formula(),
                    points.last().expect("non-empty").0
                ),
            ));
            continue;
        };
        let constant = c == Candidate::Constant;
        let (a, b) = affine_fit(&xs, &ys, constant);
        fits.push(CandidateFit {
            candidate: c,
            a,
            b,
            loo_mse: loo_mse(&xs, &ys, constant),
        });
    }
    if fits.is_empty() {
        return Err(EmpiricalError::NoCandidate);
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let tol = TIE_TOL * mean * mean;
    let best = fits.iter().map(|f| f.loo_mse).fold(f64::INFINITY, f64::min);
    let winner = fits
        .iter()
        .find(|f| f.loo_mse <= best + tol)
        .expect("minimum exists")
        .candidate;
    let winner_mse = fits
        .iter()
        .find(|f| f.candidate == winner)
        .expect("present")
        .loo_mse;
    let runner_up = fits
        .iter()
        .filter(|f| f.candidate != winner)
        .map(|f| f.loo_mse)
        .fold(f64::INFINITY, f64::min);
    let winner_margin = (fits.len() > 1).then(|| {
        if winner_mse > 0.0 {
            runner_up / winner_mse
        } else if runner_up > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    });
    Ok(FitResult {
        fits,
        excluded,
        winner,
        winner_margin,
        empirical_proxy: winner == Candidate::Exponential,
    })
}

pub fn fit_complexity(series: &MeasurementSeries) -> Result<FitResult, EmpiricalError> {
    let pts: Vec<(f64, f64)> = series
        .points()
        .iter()
        .map(|&(n, c)| (n as f64, c))
        .collect();
    fit_points(&pts)
}
