use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use heisenberg_lab::grid::{assemble_sublaplacian, GridSpec};
use heisenberg_lab::par;

fn spmv(c: &mut Criterion) {
    let spec = GridSpec::reference();
    let a = assemble_sublaplacian(&spec).expect("assembly");
    let x: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut y = vec![0.0; a.dim()];
    let mut g = c.benchmark_group("sublaplacian_apply");
    g.bench_function(BenchmarkId::new("seq", a.dim()), |b| {
        b.iter(|| a.apply_seq(black_box(&x), &mut y))
    });
    g.bench_function(BenchmarkId::new("par", a.dim()), |b| {
        b.iter(|| a.apply(black_box(&x), &mut y))
    });
    g.finish();
}

fn reductions(c: &mut Criterion) {
    let n = 1 << 20;
    let a: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
    let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let mut g = c.benchmark_group("reductions");
    g.bench_function("dot/seq", |bch| bch.iter(|| par::dot_seq(black_box(&a), &b)));
    g.bench_function("dot/par", |bch| bch.iter(|| par::dot(black_box(&a), &b)));
    let f = |i: usize| (i as f64 * 1e-3).exp().ln_1p();
    g.bench_function("sum_indexed/seq", |bch| bch.iter(|| par::sum_indexed_seq(black_box(n), f)));
    g.bench_function("sum_indexed/par", |bch| bch.iter(|| par::sum_indexed(black_box(n), f)));
    g.finish();
}

criterion_group!(benches, spmv, reductions);
criterion_main!(benches);
