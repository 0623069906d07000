// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rtl_witness::bench::{evaluate, Suite, WeightChoice};
use rtl_witness::metrics::dtw;
use rtl_witness::par::Execution;
use rtl_witness::SearchConfig;

fn suite_grid(c: &mut Criterion) {
    let suite = Suite::builtin().expect("built-in suite");
    let seeds: Vec<u64> = (0..4).collect();
    let cfg = SearchConfig::default();
    let mut group = c.benchmark_group("evaluate");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(BenchmarkId::new("builtin", name), |b| {
            b.iter(|| evaluate(&suite, &cfg, WeightChoice::default(), &seeds, exec).unwrap())
        });
    }
    group.finish();
}

fn dtw_lengths(c: &mut Criterion) {
    let mut group = c.benchmark_group("dtw");
    for len in [8usize, 32, 128] {
        let a: Vec<u64> = (0..len as u64).map(|i| i % 5).collect();
        let b: Vec<u64> = (0..len as u64).map(|i| (i * 3) % 7).collect();
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |bench, _| {
            bench.iter(|| dtw(std::hint::black_box(&a), std::hint::black_box(&b)))
        });
    }
    group.finish();
}

criterion_group!(benches, suite_grid, dtw_lengths);
criterion_main!(benches);
