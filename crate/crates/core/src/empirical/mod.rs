//! Empirical complexity estimation: timed runs over growing inputs and
//! per-candidate least-squares fits scored by leave-one-out error.

mod fit;
mod measure;

use std::fmt;
use std::str::FromStr;

pub use fit::{fit_complexity, fit_points, Candidate, CandidateFit, FitResult};
pub use measure::measure;

#[derive(Debug, thiserror::Error)]
pub enum EmpiricalError {
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("{failed} of {total} sizes failed; aborting")]
    TooManyFailures { failed: usize, total: usize },
    #[error("cannot run command")]
    Spawn(#[source] std::io::Error),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no candidate could be fitted")]
    NoCandidate,
}

impl EmpiricalError {
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            EmpiricalError::Spawn(_) | EmpiricalError::TooManyFailures { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Seconds,
    Bytes,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Seconds => "seconds",
            Units::Bytes => "bytes",
        })
    }
}

impl FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "seconds" | "s" => Ok(Units::Seconds),
            "bytes" | "b" => Ok(Units::Bytes),
            other => Err(format!("unknown units {other:?} (expected seconds|bytes)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeriesSource {
    Command(String),
    Imported(String),
}

/// Cost per input size. Sizes are strictly increasing and positive, there
/// are at least four of them, and every cost is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    points: Vec<(u64, f64)>,
    pub units: Units,
    pub repeats_per_n: usize,
    pub source: SeriesSource,
    /// Sizes whose command failed, with the reason.
    pub failures: Vec<(u64, String)>,
}

pub const MIN_POINTS: usize = 4;

impl MeasurementSeries {
    pub fn new(
        points: Vec<(u64, f64)>,
        units: Units,
        repeats_per_n: usize,
        source: SeriesSource,
    ) -> Result<Self, EmpiricalError> {
        let bad = |m: String| Err(EmpiricalError::InvalidSeries(m));
        if points.len() < MIN_POINTS {
            return bad(format!(
                "need at least {MIN_POINTS} sizes, got {}",
                points.len()
            ));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("sizes must be strictly increasing".into());
        }
        if points[0].0 == 0 {
            return bad("sizes must be positive".into());
        }
        if let Some(&(n, c)) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return bad(format!("cost {c} at n={n} is not a positive number"));
        }
        Ok(MeasurementSeries {
            points,
            units,
            repeats_per_n,
            source,
            failures: Vec::new(),
        })
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    /// `n,cost` rows with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,cost\n");
        for (n, c) in &self.points {
            out.push_str(&format!("{n},{c:e}\n"));
        }
        out
    }
}

/// Reads `n,cost` rows (an optional non-numeric header line is skipped).
pub fn import_series(
    text: &str,
    units: Units,
    origin: &str,
) -> Result<MeasurementSeries, EmpiricalError> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |reason: &str| EmpiricalError::Parse {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (n, c) = line
            .split_once(',')
            .ok_or_else(|| parse_err("expected n,cost"))?;
        match (n.trim().parse::<u64>(), c.trim().parse::<f64>()) {
            (Ok(n), Ok(c)) => points.push((n, c)),
            _ if points.is_empty() && i == 0 => continue,
            _ => return Err(parse_err("expected an integer size and a numeric cost")),
        }
    }
    MeasurementSeries::new(points, units, 1, SeriesSource::Imported(origin.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_invariants() {
        let ok = vec![(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)];
        assert!(MeasurementSeries::new(
            ok.clone(),
            Units::Seconds,
            1,
            SeriesSource::Imported("x".into())
        )
        .is_ok());
        let src = || SeriesSource::Imported("x".into());
        assert!(MeasurementSeries::new(ok[..3].to_vec(), Units::Seconds, 1, src()).is_err());
        assert!(MeasurementSeries::new(
            vec![(1, 1.0), (1, 2.0), (3, 3.0), (4, 4.0)],
            Units::Seconds,
            1,
            src()
        )
        .is_err());
        assert!(MeasurementSeries::new(
            vec![(1, 1.0), (2, 0.0), (3, 3.0), (4, 4.0)],
            Units::Seconds,
            1,
            src()
        )
        .is_err());
        assert!(MeasurementSeries::new(
            vec![(0, 1.0), (2, 1.0), (3, 3.0), (4, 4.0)],
            Units::Seconds,
            1,
            src()
        )
        .is_err());
    }

    #[test]
    fn import_with_header() {
        let s = import_series("n,cost\n1,2.0\n2,4\n4,8\n8,16.5\n", Units::Bytes, "f.csv").unwrap();
        assert_eq!(s.points().len(), 4);
        assert_eq!(s.points()[3], (8, 16.5));
        assert!(import_series("1,2\nx,y\n", Units::Bytes, "f").is_err());
    }
}
