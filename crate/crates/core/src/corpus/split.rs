use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CodeSample, ComplexityClass, Corpus, CorpusError, Target};

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
    pub warnings: Vec<String>,
}

fn round_half_up(x: f64) -> usize {
    // The epsilon absorbs representation error in products like 5 * 0.2.
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Per-class test counts: round-half-up, clamped so neither side of a class
/// empties where avoidable, then total drift repaired starting from the
/// largest class while keeping each class within one sample of its quota.
fn test_quotas(
    counts: &[(ComplexityClass, usize)],
    fraction: f64,
    warnings: &mut Vec<String>,
) -> Vec<usize> {
    let mut quotas: Vec<usize> = counts
        .iter()
        .map(|&(class, n)| {
            let mut t = round_half_up(n as f64 * fraction);
            if t >= n && n > 0 {
                t = ((n as f64 * fraction).floor() as usize).min(n - 1);
                if n == 1 {
                    warnings.push(format!(
                        "class {class} has a single sample; assigned to train"
                    ));
                }
            }
            t
        })
        .collect();

    let total: usize = counts.iter().map(|c| c.1).sum();
    let want = round_half_up(total as f64 * fraction) as i64;
    let mut drift = want - quotas.iter().sum::<usize>() as i64;
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].1.cmp(&counts[a].1).then(a.cmp(&b)));
    for &i in &order {
        if drift == 0 {
            break;
        }
        let n = counts[i].1;
        let step = drift.signum();
        let t = quotas[i] as i64 + step;
        let ideal = n as f64 * fraction;
        if t >= 0 && (t as usize) < n && (t as f64 - ideal).abs() <= 1.0 {
            quotas[i] = t as usize;
            drift -= step;
        }
    }
    quotas
}

/// Label-stratified train/test split, deterministic in `seed` and
/// independent of record order.
pub fn stratified_split(
    corpus: &Corpus,
    test_fraction: f64,
    target: Target,
    seed: u64,
) -> Result<Split, CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    corpus.require_labels(target)?;
    let mut groups: BTreeMap<ComplexityClass, Vec<&CodeSample>> = BTreeMap::new();
    for (s, c) in corpus.labelled(target) {
        groups.entry(c).or_default().push(s);
    }
    let counts: Vec<(ComplexityClass, usize)> = groups.iter().map(|(c, v)| (*c, v.len())).collect();
    let mut warnings = Vec::new();
    let quotas = test_quotas(&counts, test_fraction, &mut warnings);
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for ((class, mut members), quota) in groups.into_iter().zip(quotas) {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let class_idx = class as u64;
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (class_idx + 1));
        members.shuffle(&mut rng);
        test.extend(members[..quota].iter().map(|s| (*s).clone()));
        train.extend(members[quota..].iter().map(|s| (*s).clone()));
    }
    train.sort_by(|a, b| a.id.cmp(&b.id));
    test.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Split {
        train: Corpus::new(train)?,
        test: Corpus::new(test)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;

    pub(crate) fn shaped(counts: &[(ComplexityClass, usize)]) -> Corpus {
        let mut samples = Vec::new();
        for &(class, n) in counts {
            for i in 0..n {
                samples.push(
                    CodeSample::new(format!("{}-{i:04}", class.name()), Language::Cpp, "x")
                        .with_time(class),
                );
            }
        }
        Corpus::new(samples).unwrap()
    }

    #[test]
    fn five_and_five() {
        let c = shaped(&[
            (ComplexityClass::Linear, 5),
            (ComplexityClass::Quadratic, 5),
        ]);
        let s = stratified_split(&c, 0.2, Target::Time, 3).unwrap();
        assert_eq!(s.test.len(), 2);
        for class in [ComplexityClass::Linear, ComplexityClass::Quadratic] {
            assert_eq!(
                s.test
                    .labelled(Target::Time)
                    .filter(|(_, c)| *c == class)
                    .count(),
                1
            );
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let c = shaped(&[(ComplexityClass::Linear, 10)]);
        let a = stratified_split(&c, 0.2, Target::Time, 11).unwrap();
        let b = stratified_split(&c, 0.2, Target::Time, 11).unwrap();
        assert_eq!(a.test.len(), 2);
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn singleton_class_goes_to_train() {
        let c = shaped(&[(ComplexityClass::Linear, 4), (ComplexityClass::Cubic, 1)]);
        let s = stratified_split(&c, 0.5, Target::Time, 0).unwrap();
        assert!(s
            .train
            .samples()
            .iter()
            .any(|x| x.time_label == Some(ComplexityClass::Cubic)));
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn rejects_bad_fraction_and_missing_labels() {
        let c = shaped(&[(ComplexityClass::Linear, 4)]);
        assert!(matches!(
            stratified_split(&c, 1.0, Target::Time, 0),
            Err(CorpusError::BadFraction(_))
        ));
        assert!(matches!(
            stratified_split(&c, 0.2, Target::Space, 0),
            Err(CorpusError::MissingLabel { .. })
        ));
    }

    #[test]
    fn drift_repair_stays_within_one_sample() {
        // Seven classes of 5 at 0.1: each rounds 0.5 up to 1, total wants 4.
        let counts: Vec<_> = ComplexityClass::all().iter().map(|&c| (c, 5)).collect();
        let c = shaped(&counts);
        let s = stratified_split(&c, 0.1, Target::Time, 0).unwrap();
        assert_eq!(s.test.len(), 4);
    }
}
