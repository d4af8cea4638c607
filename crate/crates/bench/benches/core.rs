use std::hint::black_box;

use amolab_bench::golden;
use amolab_core::cocycle::transfer_product;
use amolab_core::operator::{build_hamiltonian, eigensystem};
use amolab_core::resonance::set_a;
use amolab_core::Window;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_eigensystem(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigensystem");
    let p = golden(3.0, 0.271);
    for radius in [32u32, 96, 200] {
        let h = build_hamiltonian(&p, Window::symmetric(radius));
        g.bench_with_input(BenchmarkId::from_parameter(2 * radius + 1), &h, |b, h| {
            b.iter(|| eigensystem(black_box(h)).unwrap())
        });
    }
    g.finish();
}

fn bench_transfer(c: &mut Criterion) {
    let mut g = c.benchmark_group("transfer_product");
    let p = golden(2.0, 0.4);
    for steps in [1_000i64, 100_000] {
        g.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, &n| {
            b.iter(|| transfer_product(black_box(0.3), &p, 0, n).unwrap())
        });
    }
    g.finish();
}

fn bench_set_a(c: &mut Criterion) {
    let mut g = c.benchmark_group("set_a");
    let p = golden(2.0, 0.0);
    for n in [10i64, 100] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| set_a(black_box(0.5), n, &p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_eigensystem, bench_transfer, bench_set_a);
criterion_main!(benches);
