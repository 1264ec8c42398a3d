//! Sequential versus rayon-parallel execution of the batch workloads.
//!
//! Build with `--no-default-features` to confirm the fallback: both arms
//! then run sequentially and should time the same.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use cplx::corpus::{generate_synthetic, inject_dead_helpers, SynthSpec};
use cplx::empirical::fit_points;
use cplx::model::{train_with, TrainOptions};
use cplx::normalize::{build_vocab, eliminate_dead_code};
use cplx::{ClassifierConfig, ClassifierModel, Corpus, Execution, Language, Target};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn corpus(per_class: usize) -> Corpus {
    let spec = SynthSpec {
        per_class_count: per_class,
        languages: vec![Language::Cpp, Language::Python, Language::Java],
        seed: 11,
    };
    inject_dead_helpers(&generate_synthetic(&spec).unwrap(), 8, 3)
}

fn small_config() -> ClassifierConfig {
    ClassifierConfig {
        max_len: 128,
        embed_dim: 32,
        num_attention_layers: 1,
        ffnn_hidden_dims: vec![32],
        epochs: 1,
        ..ClassifierConfig::desk(Target::Time)
    }
}

fn bench_predict(c: &mut Criterion) {
    let data = corpus(4);
    let vocab = build_vocab(&[&data], 2000).unwrap();
    let model = ClassifierModel::initialize(&small_config(), &vocab).unwrap();
    let mut group = c.benchmark_group("predict_batch");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(model.predict_batch(data.samples(), exec)))
        });
    }
    group.finish();
}

fn bench_dce(c: &mut Criterion) {
    let data = corpus(6);
    let mut group = c.benchmark_group("corpus_dce");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                black_box(exec.map(data.samples(), |s| {
                    eliminate_dead_code(&s.source, &s.language)
                }))
            })
        });
    }
    group.finish();
}

fn bench_fits(c: &mut Criterion) {
    let ns: Vec<f64> = (10..=20).map(|e| (1u64 << e) as f64).collect();
    let series: Vec<Vec<(f64, f64)>> = (0..64u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ns.iter()
                .map(|&n| (n, 2.0 * n * n.ln() * (1.0 + rng.random_range(-0.05..0.05))))
                .collect()
        })
        .collect();
    let mut group = c.benchmark_group("monte_carlo_fits");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(exec.map(&series, |pts| fit_points(pts).map(|r| r.winner))))
        });
    }
    group.finish();
}

fn bench_train(c: &mut Criterion) {
    let data = corpus(2);
    let vocab = build_vocab(&[&data], 2000).unwrap();
    let cfg = small_config();
    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                black_box(train_with(&data, &cfg, &vocab, &TrainOptions { execution }).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_predict, bench_dce, bench_fits, bench_train);
criterion_main!(benches);
