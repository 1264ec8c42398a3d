use std::process::{Command, Stdio};
use std::time::Instant;

use super::{EmpiricalError, MeasurementSeries, SeriesSource, Units};

fn run_once(command: &str) -> Result<Result<f64, String>, EmpiricalError> {
    let start = Instant::now();
    let status = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map_err(EmpiricalError::Spawn)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(if status.success() {
        Ok(secs)
    } else {
        Err(format!("exit status {status}"))
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Times `sh -c template` with `{n}` replaced by each size: one discarded
/// warm-up run, then the median of `repeats` timed runs. Sizes whose
/// command fails are recorded in `failures`; more than half failing aborts.
/// Runs are strictly sequential.
pub fn measure(
    template: &str,
    sizes: &[u64],
    repeats: usize,
) -> Result<MeasurementSeries, EmpiricalError> {
    if !template.contains("{n}") {
        return Err(EmpiricalError::InvalidArgs(
            "command template lacks a {n} placeholder".into(),
        ));
    }
    if repeats == 0 {
        return Err(EmpiricalError::InvalidArgs(
            "repeats must be at least 1".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EmpiricalError::InvalidArgs(
            "sizes must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::new();
    let mut failures = Vec::new();
    'sizes: for &n in sizes {
        let cmd = template.replace("{n}", &n.to_string());
        let mut times = Vec::with_capacity(repeats);
        for run in 0..=repeats {
            match run_once(&cmd)? {
                Ok(t) if run > 0 => times.push(t),
                Ok(_) => {}
                Err(reason) => {
                    log::warn!("n = {n}: {reason}");
                    failures.push((n, reason));
                    continue 'sizes;
                }
            }
        }
        points.push((n, median(times)));
    }
    if failures.len() * 2 > sizes.len() {
        return Err(EmpiricalError::TooManyFailures {
            failed: failures.len(),
            total: sizes.len(),
        });
    }
    let mut series = MeasurementSeries::new(
        points,
        Units::Seconds,
        repeats,
        SeriesSource::Command(template.to_string()),
    )?;
    series.failures = failures;
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_even_single() {
        assert_eq!(median(vec![3.0]), 3.0);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn failing_size_is_recorded() {
        let s = measure("test {n} -ne 4", &[1, 2, 3, 4, 5], 1).unwrap();
        assert_eq!(s.points().len(), 4);
        assert_eq!(s.failures.len(), 1);
        assert_eq!(s.failures[0].0, 4);
    }

    #[test]
    fn majority_failure_aborts() {
        let r = measure("test {n} -lt 2", &[1, 2, 3, 4, 5], 1);
        assert!(matches!(
            r,
            Err(EmpiricalError::TooManyFailures {
                failed: 4,
                total: 5
            })
        ));
    }

    #[test]
    fn bad_arguments() {
        assert!(measure("true", &[1, 2, 3, 4], 1).is_err());
        assert!(measure("true {n}", &[1, 2, 3, 4], 0).is_err());
        assert!(measure("true {n}", &[2, 1, 3, 4], 1).is_err());
    }
}
