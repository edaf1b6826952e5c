use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sbm_paths::detection::{run_experiment, sample_instance, DetectOptions, PathLengthMode};
use sbm_paths::par;
use sbm_paths::paths::build_matrix;
use sbm_paths::sbm::{sample_graph, sample_spins};
use sbm_paths::tree::simulate_many;
use sbm_paths::{PathGuard, SbmParams};

fn pools() -> Vec<(&'static str, Option<usize>)> {
    vec![("sequential", Some(1)), ("parallel", None)]
}

fn bench_build_matrix(c: &mut Criterion) {
    let p = SbmParams::new(4000, 7.0, 1.0).unwrap();
    let (_, g) = sample_instance(&p, 1).unwrap();
    let mut group = c.benchmark_group("build_matrix");
    group.sample_size(10);
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::new(name, "n4000_l3"), |b| {
            b.iter(|| par::with_threads(threads, || build_matrix(black_box(&g), 3, &PathGuard::default()).unwrap()))
        });
    }
    group.finish();
}

fn bench_sample_graph(c: &mut Criterion) {
    let p = SbmParams::new(4000, 7.0, 1.0).unwrap();
    let spins = sample_spins(p.n, 3);
    let mut group = c.benchmark_group("sample_graph");
    group.sample_size(10);
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::new(name, "n4000"), |b| {
            b.iter(|| par::with_threads(threads, || sample_graph(&p, black_box(&spins), 3).unwrap()))
        });
    }
    group.finish();
}

fn bench_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_many");
    group.sample_size(10);
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::new(name, "depth8_20k"), |b| {
            b.iter(|| par::with_threads(threads, || simulate_many(7.0, 1.0, 8, 20_000, black_box(5)).unwrap()))
        });
    }
    group.finish();
}

fn bench_experiment(c: &mut Criterion) {
    let p = SbmParams::new(1000, 7.0, 1.0).unwrap();
    let seeds: Vec<u64> = (0..4).collect();
    let opts = DetectOptions { null_resamples: 20, ..Default::default() };
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, threads) in pools() {
        group.bench_function(BenchmarkId::new(name, "n1000_4seeds"), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    run_experiment(&p, PathLengthMode::Fixed(3), 0.0, black_box(&seeds), &opts).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_build_matrix, bench_sample_graph, bench_tree, bench_experiment);
criterion_main!(benches);
