use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use levydiff_bench::walk;
use levydiff_core::ctrw::{simulate_walk, Correlation};
use levydiff_core::lattice::{run_mcwf, run_semiclassical, GridSpec, LatticeConfig};

fn ctrw(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate_walk");
    g.sample_size(10);
    let plain = walk(10_000, Correlation::None);
    let coupled = walk(
        10_000,
        Correlation::Coupled {
            chi: 1.0,
            noise_index: 1.5,
        },
    );
    g.bench_function("uncorrelated_1e4", |b| {
        b.iter(|| simulate_walk(&plain, black_box(1)).unwrap())
    });
    g.bench_function("coupled_1e4", |b| {
        b.iter(|| simulate_walk(&coupled, black_box(1)).unwrap())
    });
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    g.sample_size(10);
    let semi = LatticeConfig::new(4.8, 50, vec![0.5, 1.0], 1.0);
    g.bench_function("semiclassical_50x1ms", |b| {
        b.iter(|| run_semiclassical(&semi, black_box(1)).unwrap())
    });
    let quantum = LatticeConfig::new(4.8, 2, vec![0.02], 0.5);
    let grid = GridSpec {
        points: 1024,
        periods: 64,
    };
    g.bench_function("mcwf_2x0.02ms", |b| {
        b.iter(|| run_mcwf(&quantum, &grid, black_box(1)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, ctrw, lattice);
criterion_main!(benches);
