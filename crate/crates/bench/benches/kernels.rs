use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nplda::classifiers::{umbrella_order, umbrella_train, LdaScorer, DEFAULT_SPLIT_FRAC};
use nplda::linalg::{ar1_matrix, cholesky, Vector};
use nplda::model::LdaModel;
use nplda::numerics::{binom_upper_tail, std_normal_quantile};
use nplda::sampling::{compute_stats, sample_gaussian, TestSet};
use nplda::{elda_train, felda_train, FeatureDistribution, NpLevels, SeedSpec};

fn flat_model(p: usize) -> LdaModel {
    let beta = Vector::from_fn(p, |i, _| if i < 3 { 1.2 } else { 0.0 });
    LdaModel::from_beta(&beta, ar1_matrix(p, 0.5)).unwrap()
}

fn linear_algebra(c: &mut Criterion) {
    let mut group = c.benchmark_group("cholesky");
    for p in [30, 200] {
        let m = ar1_matrix(p, 0.5).matrix().clone();
        group.bench_with_input(BenchmarkId::from_parameter(p), &m, |b, m| b.iter(|| cholesky(black_box(m)).unwrap()));
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let levels = NpLevels::new(0.1, 0.1).unwrap();
    let mut group = c.benchmark_group("train");
    for p in [3, 30] {
        let model = flat_model(p);
        let sample = sample_gaussian(&model, 125, 125, SeedSpec::new(1, 0)).unwrap();
        let stats = compute_stats(&sample).unwrap();
        group.bench_with_input(BenchmarkId::new("compute_stats", p), &sample, |b, s| {
            b.iter(|| compute_stats(black_box(s)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("elda", p), &stats, |b, s| b.iter(|| elda_train(black_box(s), levels)));
        group.bench_with_input(BenchmarkId::new("felda", p), &stats, |b, s| b.iter(|| felda_train(black_box(s), levels)));
        group.bench_with_input(BenchmarkId::new("umbrella_lda", p), &sample, |b, s| {
            b.iter(|| umbrella_train(black_box(s), levels, DEFAULT_SPLIT_FRAC, &LdaScorer, SeedSpec::new(2, 0)))
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let model = flat_model(30);
    let test = TestSet::draw(&model, FeatureDistribution::Gaussian, 30_000, SeedSpec::new(3, 0)).unwrap();
    let sample = sample_gaussian(&model, 125, 125, SeedSpec::new(4, 0)).unwrap();
    let clf = elda_train(&compute_stats(&sample).unwrap(), NpLevels::new(0.1, 0.1).unwrap()).unwrap();
    c.bench_function("test_set_errors/p30_n30000", |b| b.iter(|| test.errors(black_box(&clf)).unwrap()));
}

fn scalar_kernels(c: &mut Criterion) {
    c.bench_function("binom_upper_tail/m1000", |b| b.iter(|| binom_upper_tail(black_box(1000), black_box(910), 0.9)));
    c.bench_function("umbrella_order/m1000", |b| {
        let levels = NpLevels::new(0.1, 0.1).unwrap();
        b.iter(|| umbrella_order(black_box(1000), levels))
    });
    c.bench_function("std_normal_quantile", |b| b.iter(|| std_normal_quantile(black_box(0.975)).unwrap()));
}

criterion_group!(benches, linear_algebra, training, evaluation, scalar_kernels);
criterion_main!(benches);
