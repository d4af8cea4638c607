use std::hint::black_box;

use amolab_bench::{golden, phases};
use amolab_cli::cache::{EigenCache, Lookup};
use amolab_core::operator::{build_hamiltonian, eigensystem};
use amolab_core::Window;
use criterion::{criterion_group, criterion_main, Criterion};

const ENTRIES: usize = 10_000;

fn bench_lookup(c: &mut Criterion) {
    let dir = tempfile::tempdir().expect("temp dir");
    let cache = EigenCache::open(dir.path()).expect("cache dir");
    let w = Window::symmetric(4);
    let params: Vec<_> = phases(ENTRIES).into_iter().map(|t| golden(2.0, t)).collect();
    for p in &params {
        let es = eigensystem(&build_hamiltonian(p, w)).expect("solve");
        cache.put(p, w, &es).expect("write");
    }
    let mut i = 0;
    c.bench_function("cache_lookup_10k", |b| {
        b.iter(|| {
            i = (i + 7919) % ENTRIES;
            match cache.get(black_box(&params[i]), w) {
                Lookup::Hit(es) => es,
                other => panic!("expected a hit, got {other:?}"),
            }
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_lookup
}
criterion_main!(benches);
