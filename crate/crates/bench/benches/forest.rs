use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use metatune::{friedman, prediction_intervals, train_forest, ForestConfig};
use metatune_bench::{linear, matrix};

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_forest");
    group.sample_size(10);
    for &rows in &[200usize, 1000] {
        let data = linear(rows, 8, 1);
        let cfg = ForestConfig {
            n_trees: 100,
            ..ForestConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(rows), &data, |b, d| {
            b.iter(|| train_forest(black_box(d), &cfg).unwrap())
        });
    }
    group.finish();
}

fn intervals(c: &mut Criterion) {
    let train = linear(1000, 8, 2);
    let test = linear(300, 8, 3);
    let model = train_forest(
        &train,
        &ForestConfig {
            n_trees: 200,
            ..ForestConfig::default()
        },
    )
    .unwrap();
    c.bench_function("prediction_intervals/300x200", |b| {
        b.iter(|| prediction_intervals(&model, black_box(&test), 0.9).unwrap())
    });
}

fn rank_test(c: &mut Criterion) {
    let m = matrix(500, 20, 4);
    c.bench_function("friedman/500x20", |b| b.iter(|| friedman(black_box(&m)).unwrap()));
}

criterion_group!(benches, training, intervals, rank_test);
criterion_main!(benches);
