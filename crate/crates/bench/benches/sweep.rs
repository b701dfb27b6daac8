use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use sparsecut::sweep::{sweep_conductances, sweep_conductances_direct, sweep_distributed};
use sparsecut::SimConfig;
use sparsecut_bench::{random_graph, scrambled_order};

fn centralized(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for n in [50, 200, 800] {
        let g = random_graph(n, 1);
        let order = scrambled_order(n);
        group.bench_with_input(BenchmarkId::new("incremental", n), &n, |b, _| {
            b.iter(|| sweep_conductances(&g, black_box(&order)).unwrap())
        });
        if n <= 200 {
            group.bench_with_input(BenchmarkId::new("direct", n), &n, |b, _| {
                b.iter(|| sweep_conductances_direct(&g, black_box(&order)).unwrap())
            });
        }
    }
    group.finish();
}

fn distributed(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_distributed");
    group.sample_size(20);
    for n in [20, 60] {
        let g = random_graph(n, 2);
        let order = scrambled_order(n);
        let sim = SimConfig::with_seed(0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| sweep_distributed(&g, black_box(&order), &sim).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, centralized, distributed);
criterion_main!(benches);
