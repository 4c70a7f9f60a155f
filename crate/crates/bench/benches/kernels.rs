use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use lpnls::decomposition::d_class_decompose;
use lpnls::norms::{mixed_norm, y_seminorm};
use lpnls::solver::{difference_nonlinearity, solve_nls, SolverConfig};
use lpnls::spectral::{fourier, free_propagate};
use lpnls_bench::{linear_trajectory, rough, smooth};

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [1024, 4096, 16384] {
        let f = smooth(n);
        g.bench_with_input(BenchmarkId::new("fourier", n), &f, |b, f| b.iter(|| fourier(black_box(f)).unwrap()));
        g.bench_with_input(BenchmarkId::new("free_propagate", n), &f, |b, f| {
            b.iter(|| free_propagate(black_box(f), 0.7).unwrap())
        });
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let f = smooth(4096);
    let cfg = SolverConfig::new(1e-3).with_record_every(100);
    c.bench_function("strang_100_steps_4096", |b| b.iter(|| solve_nls(black_box(&f), 0.0, 0.1, &cfg).unwrap()));
    let w = rough(4096).scale(0.1.into());
    c.bench_function("difference_nonlinearity_4096", |b| {
        b.iter(|| difference_nonlinearity(black_box(&f), black_box(&w)).unwrap())
    });
}

fn norms(c: &mut Criterion) {
    let u = linear_trajectory(4096, 64);
    c.bench_function("mixed_norm_l4l6_64x4096", |b| b.iter(|| mixed_norm(black_box(&u), 4.0, 6.0).unwrap()));
    c.bench_function("y_seminorm_64x4096", |b| b.iter(|| y_seminorm(black_box(&u), 2.9, 2.9 / 1.9, 0.0).unwrap()));
}

fn decomposition(c: &mut Criterion) {
    let f = rough(4096);
    c.bench_function("d_class_decompose_4096", |b| {
        b.iter(|| d_class_decompose(black_box(&f), 2.9, 0.18125, 16.0).unwrap())
    });
}

criterion_group!(benches, spectral, solver, norms, decomposition);
criterion_main!(benches);
