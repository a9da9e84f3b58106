use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sudler::envelope::{Envelope, EnvelopeConfig};
use sudler::limit::g_truncated;
use sudler::{expand, shifted_product, sudler_product, QuadraticParams, SudlerSequence};

fn direct_product(c: &mut Criterion) {
    let params = QuadraticParams::new(1).unwrap();
    let mut group = c.benchmark_group("sudler_product");
    for n in [1_000u64, 100_000, 1_000_000] {
        group.throughput(Throughput::Elements(n));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| sudler_product(&params, black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let params = QuadraticParams::new(5).unwrap();
    let mut group = c.benchmark_group("sequence_sweep");
    group.throughput(Throughput::Elements(100_000));
    group.bench_function("b5_first_100000", |b| {
        b.iter(|| SudlerSequence::range(&params, 1, 100_001).unwrap().map(|(_, l)| l).fold(0.0, f64::max))
    });
    group.finish();
}

fn blocks(c: &mut Criterion) {
    let params = QuadraticParams::new(1).unwrap();
    c.bench_function("shifted_product_k20", |b| b.iter(|| shifted_product(&params, 20, black_box(0.13)).unwrap()));
    c.bench_function("ostrowski_expand", |b| b.iter(|| expand(black_box(987_654_321), 1).unwrap()));
}

fn limits(c: &mut Criterion) {
    let params = QuadraticParams::new(1).unwrap();
    c.bench_function("g_truncated_t100000", |b| b.iter(|| g_truncated(&params, 100_000, black_box(0.2)).unwrap()));
    let env = Envelope::new(EnvelopeConfig::for_base(5).unwrap()).unwrap();
    c.bench_function("envelope_eval_b5", |b| b.iter(|| env.eval(black_box(0.3)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = direct_product, sweep, blocks, limits
}
criterion_main!(benches);
