use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ComplexityClass, Corpus, CorpusError, Target};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthStats {
    pub mean: f64,
    pub median: f64,
    pub min: usize,
    pub max: usize,
}

impl LengthStats {
    fn from_values(mut values: Vec<usize>) -> Self {
        values.sort_unstable();
        let n = values.len();
        let mean = values.iter().sum::<usize>() as f64 / n as f64;
        let median = if n % 2 == 1 {
            values[n / 2] as f64
        } else {
            (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
        };
        LengthStats {
            mean,
            median,
            min: values[0],
            max: values[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub target: Target,
    /// Every class of the target label set, zero counts included.
    pub per_class_counts: BTreeMap<ComplexityClass, usize>,
    pub labelled: usize,
    pub total: usize,
    /// Character (code point) lengths.
    pub length: LengthStats,
    pub lines: LengthStats,
    pub majority_class_fraction: f64,
}

pub fn compute_stats(corpus: &Corpus, target: Target) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut per_class_counts: BTreeMap<_, _> = target.classes().iter().map(|&c| (c, 0)).collect();
    let mut labelled = 0;
    for (_, class) in corpus.labelled(target) {
        if let Some(n) = per_class_counts.get_mut(&class) {
            *n += 1;
            labelled += 1;
        }
    }
    let samples = corpus.samples();
    let length =
        LengthStats::from_values(samples.iter().map(|s| s.source.chars().count()).collect());
    let lines =
        LengthStats::from_values(samples.iter().map(|s| s.source.lines().count()).collect());
    let majority = per_class_counts.values().copied().max().unwrap_or(0);
    let majority_class_fraction = if labelled == 0 {
        0.0
    } else {
        majority as f64 / labelled as f64
    };
    Ok(CorpusStats {
        target,
        per_class_counts,
        labelled,
        total: corpus.len(),
        length,
        lines,
        majority_class_fraction,
    })
}

impl CorpusStats {
    /// `class,count,fraction` rows, fraction relative to labelled samples.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,count,fraction\n");
        for (class, &count) in &self.per_class_counts {
            let frac = if self.labelled == 0 {
                0.0
            } else {
                count as f64 / self.labelled as f64
            };
            let _ = writeln!(out, "{},{},{:.6}", class.name(), count, frac);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "target: {}", self.target);
        let _ = writeln!(out, "samples: {} (labelled {})", self.total, self.labelled);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>8} {:>10}", "class", "count", "fraction");
        for (class, &count) in &self.per_class_counts {
            let frac = if self.labelled == 0 {
                0.0
            } else {
                count as f64 / self.labelled as f64
            };
            let _ = writeln!(out, "{:<12} {:>8} {:>10.4}", class.name(), count, frac);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>10} {:>10}", "statistic", "chars", "lines");
        let rows = [
            (
                "mean",
                format!("{:.2}", self.length.mean),
                format!("{:.2}", self.lines.mean),
            ),
            (
                "median",
                format!("{:.1}", self.length.median),
                format!("{:.1}", self.lines.median),
            ),
            (
                "minimum",
                self.length.min.to_string(),
                self.lines.min.to_string(),
            ),
            (
                "maximum",
                self.length.max.to_string(),
                self.lines.max.to_string(),
            ),
        ];
        for (name, chars, lines) in rows {
            let _ = writeln!(out, "{name:<12} {chars:>10} {lines:>10}");
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "majority class fraction: {:.4}",
            self.majority_class_fraction
        );
        out
    }
}
