//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom harness so the lines always appear in `cargo test`
//! output. Criteria listed in `KNOWN_FAILURES` are reported as FAIL with
//! their reason but do not abort the test run; any other failure does.
//! Set `ACCEPTANCE_STRICT=1` to make every failure fatal, and
//! `BLESS_GOLDEN=1` to rewrite the golden fixtures.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ndarray::Array2;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use cplx::corpus::{compute_stats, stratified_split};
use cplx::empirical::{fit_points, Candidate};
use cplx::eval::{
    cross_language_eval, dce_ablation, evaluate, multi_run, ConstantPredictor, Metrics, Protocol,
    UniformRandomPredictor,
};
use cplx::interpret::{nmf, render_report, ReportMeta};
use cplx::model::train_with;
use cplx::model::TrainOptions;
use cplx::normalize::{build_vocab, eliminate_dead_code, tokenize, TokenKind};
use cplx::{ClassifierConfig, ClassifierModel, ComplexityClass, Corpus, Language, Target};

use common::{dead_code_corpus, golden, mini_model, non_comment_tokens, paper_cpp_shape, synth};

/// Criteria that cannot pass with the specified method, and why.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    8,
    "least-squares affine fits with exact LOO-MSE pick O(n) over O(n log n) in roughly a third of \
     5%-noise trials at n = 2^10..2^20; the 95/100 threshold is not reachable without changing the fitter",
)];

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn criterion_01_scope() -> Outcome {
    // Pretrained 41M-220M parameter encoders are out of scope; the desk
    // model is trained from scratch and must stay far below that size.
    let data = synth(2, &[Language::Cpp], 0);
    let vocab = build_vocab(&[&data], 5000).map_err(|e| e.to_string())?;
    let model = ClassifierModel::initialize(&ClassifierConfig::default(), &vocab)
        .map_err(|e| e.to_string())?;
    let params = model.params().num_parameters();
    check(params < 41_000_000, format!("{params} parameters"))?;
    Ok(format!(
        "published accuracies not reproduced; from-scratch desk model with {params} parameters, criteria 2-12 substitute"
    ))
}

fn criterion_02_synthetic_learning() -> Outcome {
    let data = synth(100, &[Language::Cpp], 0);
    let summary = multi_run(&ClassifierConfig::default(), &data, 5).map_err(|e| e.to_string())?;
    let accs: Vec<String> = summary
        .runs
        .iter()
        .map(|m| format!("{:.3}", m.overall_accuracy))
        .collect();
    check(
        summary.mean >= 0.90,
        format!("mean accuracy {:.4} < 0.90 (runs {accs:?})", summary.mean),
    )?;
    Ok(format!(
        "mean accuracy {:.4} over seeds 0..4 (runs {})",
        summary.mean,
        accs.join(", ")
    ))
}

fn criterion_03_overfit() -> Outcome {
    let data = synth(5, &[Language::Cpp], 3);
    let subset = Corpus::new(data.samples()[..32].to_vec()).map_err(|e| e.to_string())?;
    let cfg = ClassifierConfig {
        epochs: 200,
        ..ClassifierConfig::default()
    };
    let vocab = build_vocab(&[&subset], 5000).map_err(|e| e.to_string())?;
    let outcome =
        train_with(&subset, &cfg, &vocab, &TrainOptions::default()).map_err(|e| e.to_string())?;
    let correct = subset
        .samples()
        .iter()
        .filter(|s| {
            let p = outcome.model.predict(s, false);
            Some(p.class) == s.time_label
        })
        .count();
    let first_perfect = outcome
        .history
        .iter()
        .find(|e| e.train_accuracy == 1.0)
        .map(|e| e.epoch);
    check(correct == 32, format!("final model fits {correct}/32"))?;
    Ok(format!(
        "32/32 training samples fitted; running accuracy first reached 100% at epoch {}",
        first_perfect.map_or("-".to_string(), |e| e.to_string())
    ))
}

fn criterion_04_gradients() -> Outcome {
    let (mut model, batch) = mini_model();
    let (_, analytic) = model.loss_and_gradient(&batch);
    let names = model.params().names();
    let seq_max = batch.iter().map(|(ids, _)| ids.len()).max().unwrap();
    let h = 1e-5;
    let mut worst = (0.0f64, String::new());
    for (t, name) in names.iter().enumerate() {
        let shape = model.params().tensors()[t].dim();
        let rows = if name == "pos_emb" { seq_max } else { shape.0 };
        let mut diff2 = 0.0;
        let mut a2 = 0.0;
        let mut n2 = 0.0;
        for r in 0..rows {
            for c in 0..shape.1 {
                let orig = model.params().tensors()[t][[r, c]];
                model.params_mut().tensors_mut()[t][[r, c]] = orig + h;
                let plus = model.loss_and_gradient(&batch).0;
                model.params_mut().tensors_mut()[t][[r, c]] = orig - h;
                let minus = model.loss_and_gradient(&batch).0;
                model.params_mut().tensors_mut()[t][[r, c]] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let a = analytic.tensors()[t][[r, c]];
                diff2 += (a - numeric).powi(2);
                a2 += a * a;
                n2 += numeric * numeric;
            }
        }
        if name == "pos_emb" {
            // Positions past the longest sequence never receive gradient.
            let tail = analytic.tensors()[t]
                .slice(ndarray::s![seq_max.., ..])
                .iter()
                .all(|&g| g == 0.0);
            check(tail, "unused positions received gradient")?;
        }
        let denom = a2.sqrt().max(n2.sqrt());
        let rel = if denom < 1e-12 {
            0.0
        } else {
            diff2.sqrt() / denom
        };
        if rel > worst.0 {
            worst = (rel, name.clone());
        }
        check(rel < 1e-4, format!("{name}: relative error {rel:e}"))?;
    }
    Ok(format!(
        "{} tensors agree; worst relative error {:.2e} ({})",
        names.len(),
        worst.0,
        worst.1
    ))
}

fn criterion_05_dce_properties() -> Outcome {
    let mut corpora = vec![
        dead_code_corpus(),
        synth(6, &[Language::Cpp, Language::Python, Language::Java], 21),
    ];
    corpora.push(common::fixture_corpus());
    let mut samples = 0;
    let mut removals = 0;
    for corpus in &corpora {
        for s in corpus.samples() {
            samples += 1;
            let (once, report) = eliminate_dead_code(&s.source, &s.language);
            let (twice, again) = eliminate_dead_code(&once, &s.language);
            check(
                twice == once && again.removed.is_empty(),
                format!("{}: second pass changed the output", s.id),
            )?;
            let before = non_comment_tokens(&s.source, &s.language);
            let after = non_comment_tokens(&once, &s.language);
            check(
                after <= before,
                format!("{}: token count grew {before} -> {after}", s.id),
            )?;
            let tokens = tokenize(&s.source, &s.language);
            for r in &report.removed {
                removals += 1;
                let outside = tokens.iter().any(|t| {
                    t.kind == TokenKind::Identifier
                        && t.text == r.name
                        && !report
                            .removed
                            .iter()
                            .any(|o| o.span.0 <= t.span.0 && t.span.1 <= o.span.1)
                });
                check(
                    !outside,
                    format!("{}: removed {} {} is used elsewhere", s.id, r.kind, r.name),
                )?;
            }
        }
    }
    Ok(format!(
        "{samples} samples, {removals} removals: idempotent, token counts non-increasing, no live identifier removed"
    ))
}

fn criterion_06_dce_ablation() -> Outcome {
    let data = common::eviction_corpus();
    let cfg = common::eviction_config();
    let r = dce_ablation(&cfg, &data, 5, &Protocol::default()).map_err(|e| e.to_string())?;
    check(
        r.with_dce.mean_tokens <= r.without_dce.mean_tokens,
        "with-DCE arm has more tokens",
    )?;
    check(
        r.with_dce.mean >= r.without_dce.mean,
        format!(
            "with {:.4} < without {:.4}",
            r.with_dce.mean, r.without_dce.mean
        ),
    )?;
    Ok(format!(
        "with DCE {:.4} >= without {:.4} over seeds 0..4 (mean tokens {:.1} vs {:.1})",
        r.with_dce.mean, r.without_dce.mean, r.with_dce.mean_tokens, r.without_dce.mean_tokens
    ))
}

fn criterion_07_nmf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rise = 0.0f64;
    for trial in 0..100u64 {
        let rows = rng.random_range(3..25);
        let cols = rng.random_range(3..20);
        let k = rng.random_range(1..=rows.min(cols).min(6));
        let v = Array2::from_shape_fn((rows, cols), |_| rng.random_range(0.01..1.0));
        let f = nmf(&v, k, 200, 0.0, trial).map_err(|e| e.to_string())?;
        for w in f.error_history.windows(2) {
            // Multiplicative updates are monotone in exact arithmetic; allow
            // rounding-level wobble only.
            let rise = (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE);
            worst_rise = worst_rise.max(rise);
            check(
                rise <= 1e-9,
                format!("trial {trial}: error rose {} -> {}", w[0], w[1]),
            )?;
        }
        check(
            f.w.iter().chain(f.h.iter()).all(|&x| x >= 0.0),
            format!("trial {trial}: negative factor"),
        )?;
        if trial < 5 {
            let g = nmf(&v, k, 200, 0.0, trial).map_err(|e| e.to_string())?;
            check(
                f == g,
                format!("trial {trial}: factors differ between identical runs"),
            )?;
        }
    }
    let u: Vec<f64> = (0..12).map(|i| 0.5 + i as f64 * 0.25).collect();
    let w: Vec<f64> = (0..9).map(|j| 1.0 + (j as f64 * 0.7).sin().abs()).collect();
    let v = Array2::from_shape_fn((12, 9), |(i, j)| u[i] * w[j]);
    let f = nmf(&v, 1, 500, 1e-12, 3).map_err(|e| e.to_string())?;
    check(
        f.final_relative_error < 1e-3,
        format!("rank-1 relative error {:e}", f.final_relative_error),
    )?;
    Ok(format!(
        "100 matrices monotone (largest relative rise {worst_rise:.1e}), deterministic; rank-1 error {:.1e}",
        f.final_relative_error
    ))
}

fn criterion_08_fitter() -> Outcome {
    // Exact in-basis series.
    let cases: Vec<(Candidate, Vec<f64>)> = vec![
        (Candidate::Constant, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (Candidate::LogN, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (Candidate::Linear, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (Candidate::NLogN, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (Candidate::Quadratic, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (Candidate::Cubic, vec![8.0, 16.0, 32.0, 64.0, 128.0]),
        (
            Candidate::Exponential,
            vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0],
        ),
    ];
    for (cand, ns) in &cases {
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let f = match cand {
                    Candidate::Constant => 0.0,
                    Candidate::LogN => n.ln(),
                    Candidate::Linear => n,
                    Candidate::NLogN => n * n.ln(),
                    Candidate::Quadratic => n * n,
                    Candidate::Cubic => n * n * n,
                    Candidate::Exponential => 2f64.powf(n),
                };
                (n, 5.0 * f + 3.0)
            })
            .collect();
        let r = fit_points(&pts).map_err(|e| e.to_string())?;
        check(
            r.winner == *cand,
            format!("{cand:?} series won by {:?}", r.winner),
        )?;
        let scale = pts.iter().map(|p| p.1 * p.1).sum::<f64>() / pts.len() as f64;
        let rel = r.winner_fit().loo_mse / scale;
        check(rel < 1e-9, format!("{cand:?}: relative LOO-MSE {rel:e}"))?;
    }

    // Scale invariance on a noisy series.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let base: Vec<(f64, f64)> = (3..12)
        .map(|e| {
            let n = (1u64 << e) as f64;
            (
                n,
                n * n * rng.random_range(0.8..1.2) + rng.random_range(0.0..50.0),
            )
        })
        .collect();
    let r0 = fit_points(&base).map_err(|e| e.to_string())?;
    for s in [0.5, 4.0, 1024.0] {
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(n, c)| (n, c * s)).collect();
        let r = fit_points(&scaled).map_err(|e| e.to_string())?;
        check(r.winner == r0.winner, format!("scale {s}: winner changed"))?;
    }

    // Monte Carlo: cost = 2 n ln n with N(0, 5%) multiplicative noise.
    let ns: Vec<f64> = (10..=20).map(|e| (1u64 << e) as f64).collect();
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut wins = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| (n, 2.0 * n * n.ln() * (1.0 + noise.sample(&mut rng))))
            .collect();
        if fit_points(&pts).map_err(|e| e.to_string())?.winner == Candidate::NLogN {
            wins += 1;
        }
    }
    check(
        wins >= 95,
        format!("exact recovery for all 7 candidates and scale invariance hold, but noisy n log n won only {wins}/100 trials"),
    )?;
    Ok(format!(
        "exact recovery for 7 candidates, scale invariance, noisy n log n won {wins}/100"
    ))
}

fn criterion_09_metrics() -> Outcome {
    let target = Target::Time;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let pairs: Vec<(usize, usize)> = (0..rng.random_range(1..300))
            .map(|_| (rng.random_range(0..7), rng.random_range(0..7)))
            .collect();
        let m = Metrics::from_pairs(target, pairs.iter().copied()).map_err(|e| e.to_string())?;
        let total: usize = m.confusion.iter().flatten().sum();
        check(
            total == m.n_test && total == pairs.len(),
            "confusion does not sum to n_test",
        )?;
        // Exact identity in rationals: overall = sum_c (n_c / n) * (correct_c / n_c).
        let n = pairs.len() as i64;
        let mut weighted = Ratio::from_integer(0i64);
        for c in 0..7 {
            let n_c = pairs.iter().filter(|p| p.0 == c).count() as i64;
            let ok_c = pairs.iter().filter(|p| p.0 == c && p.1 == c).count() as i64;
            if n_c > 0 {
                weighted += Ratio::new(n_c, n) * Ratio::new(ok_c, n_c);
                check(
                    m.per_class_accuracy[c] == Some(ok_c as f64 / n_c as f64),
                    "per-class accuracy",
                )?;
            } else {
                check(
                    m.per_class_accuracy[c].is_none(),
                    "absent class must be n/a",
                )?;
            }
        }
        let overall = Ratio::new(m.correct() as i64, n);
        check(
            overall == weighted,
            "overall accuracy differs from weighted per-class mean",
        )?;
        check(
            m.overall_accuracy == *overall.numer() as f64 / *overall.denom() as f64,
            "float overall",
        )?;
    }
    let fixture = common::imbalanced_fixture();
    let majority = ConstantPredictor::majority(&fixture, target).map_err(|e| e.to_string())?;
    let m = evaluate(&majority, &fixture, target).map_err(|e| e.to_string())?;
    check(
        majority.class == ComplexityClass::Linear,
        "majority class should be O(n)",
    )?;
    check(
        m.overall_accuracy == 0.558,
        format!("majority predictor scored {}", m.overall_accuracy),
    )?;
    Ok("rational identity on 50 random confusions; majority predictor scores exactly 0.558".into())
}

fn criterion_10_split() -> Outcome {
    let corpus = paper_cpp_shape();
    let stats = compute_stats(&corpus, Target::Time).map_err(|e| e.to_string())?;
    for seed in 0..20 {
        let split =
            stratified_split(&corpus, 0.2, Target::Time, seed).map_err(|e| e.to_string())?;
        for (&class, &n) in &stats.per_class_counts {
            let t = split
                .test
                .samples()
                .iter()
                .filter(|s| s.time_label == Some(class))
                .count();
            let dev = (t as f64 - 0.2 * n as f64).abs();
            check(
                dev <= 1.0,
                format!("seed {seed}, {class}: {t} of {n} in test"),
            )?;
        }
        let again =
            stratified_split(&corpus, 0.2, Target::Time, seed).map_err(|e| e.to_string())?;
        let ids = |c: &Corpus| c.samples().iter().map(|s| s.id.clone()).collect::<Vec<_>>();
        check(
            ids(&split.test) == ids(&again.test),
            format!("seed {seed}: split not deterministic"),
        )?;
    }
    Ok(
        "1410-sample corpus: every class within one sample of 20% for seeds 0..19, deterministic"
            .into(),
    )
}

fn criterion_11_clt() -> Outcome {
    let train_corpus = synth(3, &[Language::Cpp], 5);
    let test_corpus = synth(3, &[Language::Python], 6);
    let vocab = build_vocab(&[&train_corpus, &test_corpus], 5000).map_err(|e| e.to_string())?;
    let cfg = common::tiny_config(2);
    let model = train_with(&train_corpus, &cfg, &vocab, &TrainOptions::default())
        .map_err(|e| e.to_string())?
        .model;
    let before = model.to_bytes();
    let report =
        cross_language_eval(&model, &test_corpus, Target::Time).map_err(|e| e.to_string())?;
    check(model.to_bytes() == before, "checkpoint bytes changed")?;
    check(
        report.metrics.n_test == test_corpus.len(),
        "n_test differs from corpus size",
    )?;
    check(
        (report.random_baseline - 1.0 / 7.0).abs() < 1e-15,
        "random baseline is not 1/7",
    )?;
    check(
        format!("{:.2}%", report.random_baseline * 100.0) == "14.29%",
        "baseline formatting",
    )?;
    check(
        cross_language_eval(&model, &train_corpus, Target::Time).is_err(),
        "same-language evaluation accepted",
    )?;

    let balanced = synth(100, &[Language::Cpp], 8);
    let uniform = UniformRandomPredictor {
        target: Target::Time,
        seed: 2024,
    };
    let m = evaluate(&uniform, &balanced, Target::Time).map_err(|e| e.to_string())?;
    check(m.n_test == 700, "balanced corpus size")?;
    check(
        (m.overall_accuracy - 1.0 / 7.0).abs() <= 0.03,
        format!("uniform predictor accuracy {:.4}", m.overall_accuracy),
    )?;
    Ok(format!(
        "model unchanged, baseline 1/7 reported; uniform predictor {:.4} on 700 samples",
        m.overall_accuracy
    ))
}

fn criterion_12_golden() -> Outcome {
    let mut checked = 0;
    for (name, lang) in [
        ("sample.cpp", Language::Cpp),
        ("sample.py", Language::Python),
        ("Sample.java", Language::Java),
    ] {
        let source = common::fixture(name);
        golden(
            &format!("{name}.tokens"),
            &common::render_tokens(&source, &lang),
        )?;
        let (clean, report) = eliminate_dead_code(&source, &lang);
        golden(&format!("{name}.dce"), &clean)?;
        golden(
            &format!("{name}.removals"),
            &common::render_removals(&report),
        )?;
        checked += 3;
    }
    let corpus = common::fixture_corpus();
    let stats = compute_stats(&corpus, Target::Time).map_err(|e| e.to_string())?;
    golden("stats.txt", &stats.to_table())?;
    golden("stats.csv", &stats.to_csv())?;
    let v = Array2::from_shape_fn((6, 5), |(i, j)| ((i * 5 + j) % 7) as f64 * 0.5 + 0.1);
    let f = nmf(&v, 2, 100, 1e-6, 4).map_err(|e| e.to_string())?;
    let tokens: Vec<String> = ["for", "(", "i", "<", "n", ")"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let meta = ReportMeta {
        title: "fixture".into(),
        sample_id: "fixture-0".into(),
        seed: 4,
        fingerprint: "0123456789abcdef".into(),
        layer_range: (0, 1),
        relative_error: f.final_relative_error,
    };
    golden(
        "nmf_report.html",
        &render_report(&tokens, &f.w, &meta).map_err(|e| e.to_string())?,
    )?;
    checked += 3;
    Ok(format!(
        "{checked} outputs byte-identical to frozen fixtures"
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "scope substitution", criterion_01_scope),
        (
            2,
            "synthetic-corpus learning",
            criterion_02_synthetic_learning,
        ),
        (3, "overfit sanity", criterion_03_overfit),
        (4, "gradient correctness", criterion_04_gradients),
        (
            5,
            "dead-code elimination properties",
            criterion_05_dce_properties,
        ),
        (6, "dead-code ablation direction", criterion_06_dce_ablation),
        (7, "NMF monotonicity, rank-1, determinism", criterion_07_nmf),
        (8, "empirical fitter", criterion_08_fitter),
        (9, "metrics identities", criterion_09_metrics),
        (10, "split stratification", criterion_10_split),
        (11, "cross-language harness", criterion_11_clt),
        (12, "golden report files", criterion_12_golden),
    ];
    let only: Option<Vec<u32>> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.parse().ok())
        .collect::<Option<Vec<u32>>>()
        .filter(|v| !v.is_empty());
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let mut ran = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("criterion {id:>2} PASS  {name}: {detail} [{secs:.1}s]");
            }
            Err(reason) => {
                let known = KNOWN_FAILURES.iter().find(|k| k.0 == id);
                match known {
                    Some((_, why)) if !strict => {
                        println!(
                            "criterion {id:>2} FAIL  {name}: {reason} [{secs:.1}s] (known: {why})"
                        )
                    }
                    _ => {
                        println!("criterion {id:>2} FAIL  {name}: {reason} [{secs:.1}s]");
                        unexpected.push(id);
                    }
                }
            }
        }
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
