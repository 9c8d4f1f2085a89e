use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use levydiff_bench::kernel_series;
use levydiff_core::stable::{
    stable_fit, stable_pdf, stable_pdf_many, stable_sample, StableFitOptions, StableParams,
};

fn pdf(c: &mut Criterion) {
    let mut g = c.benchmark_group("stable_pdf");
    for alpha in [0.5, 0.8, 1.5] {
        let p = StableParams::symmetric(alpha, 1.0, 0.0).unwrap();
        g.bench_with_input(BenchmarkId::new("point", alpha), &p, |b, p| {
            b.iter(|| stable_pdf(p, black_box(0.7)).unwrap())
        });
        let xs: Vec<f64> = (0..512).map(|i| -20.0 + 40.0 * i as f64 / 511.0).collect();
        g.bench_with_input(BenchmarkId::new("grid512", alpha), &p, |b, p| {
            b.iter(|| stable_pdf_many(p, black_box(&xs)).unwrap())
        });
    }
    g.finish();
}

fn sample(c: &mut Criterion) {
    let sym = StableParams::symmetric(1.5, 1.0, 0.0).unwrap();
    let one = StableParams::one_sided(0.7, 1.0).unwrap();
    c.bench_function("stable_sample/symmetric_1e5", |b| {
        b.iter(|| stable_sample(&sym, black_box(1), 100_000))
    });
    c.bench_function("stable_sample/one_sided_1e5", |b| {
        b.iter(|| stable_sample(&one, black_box(1), 100_000))
    });
}

fn fit(c: &mut Criterion) {
    let curve = kernel_series(1.3, &[1.0]).remove(0);
    let opts = StableFitOptions::default();
    let mut g = c.benchmark_group("stable_fit");
    g.sample_size(10);
    g.bench_function("alpha_1.3_512pts", |b| {
        b.iter(|| stable_fit(black_box(&curve), &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pdf, sample, fit);
criterion_main!(benches);
