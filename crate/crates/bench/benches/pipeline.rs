use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use migtriad::{
    count_parallel, count_tables, evaluate_models, kendall_tau, spearman_rho, UniverseMode,
};
use migtriad_bench::corpus;

fn counting(c: &mut Criterion) {
    let records = corpus(60, 100_000);
    let mut group = c.benchmark_group("counting");
    group.throughput(Throughput::Elements(records.len() as u64));
    group.bench_function("sequential", |b| b.iter(|| count_tables(&records)));
    for workers in [2, 4, 8] {
        group.bench_with_input(BenchmarkId::new("parallel", workers), &workers, |b, &w| {
            b.iter(|| count_parallel(&records, w).unwrap())
        });
    }
    group.finish();
}

fn correlation(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlation");
    for n in [1_000usize, 100_000] {
        // deterministic scramble with plenty of ties
        let x: Vec<f64> = (0..n).map(|i| (i % 97) as f64).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1013) as f64).collect();
        group.bench_with_input(BenchmarkId::new("kendall", n), &n, |b, _| {
            b.iter(|| kendall_tau(&x, &y).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("spearman", n), &n, |b, _| {
            b.iter(|| spearman_rho(&x, &y).unwrap())
        });
    }
    group.finish();
}

fn ranking(c: &mut Criterion) {
    let (pairs, triples) = count_tables(&corpus(40, 50_000));
    c.bench_function("evaluate_models", |b| {
        b.iter(|| evaluate_models(&pairs, &triples, UniverseMode::Observed).unwrap())
    });
}

criterion_group!(benches, counting, correlation, ranking);
criterion_main!(benches);
