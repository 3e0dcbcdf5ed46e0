use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C;

use stepmap::blaschke::{blaschke_truncation, FnAnalytic};
use stepmap::harmonic::{eval_poisson_extension, fourier_coefficients, HarmonicStepMap};
use stepmap::univalence::{certify, winding_number, CertifyConfig};
use stepmap::PlaneMap;
use stepmap_bench::{sample_points, uneven_polygon};

fn poisson(c: &mut Criterion) {
    let mut g = c.benchmark_group("poisson_eval");
    let pts = sample_points(0.95, 8, 32);
    for n in [8, 64, 256] {
        let sf = uneven_polygon(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &sf, |b, sf| {
            b.iter(|| pts.iter().map(|&z| eval_poisson_extension(sf, z).unwrap()).sum::<C>())
        });
    }
    g.finish();
}

fn closed_form_vs_series(c: &mut Criterion) {
    let m = HarmonicStepMap::new(&uneven_polygon(32));
    let pts = sample_points(0.9, 8, 32);
    c.bench_function("closed_form_eval_32", |b| b.iter(|| pts.iter().map(|&z| m.eval(z)).sum::<C>()));
    c.bench_function("series_eval_32", |b| b.iter(|| pts.iter().map(|&z| m.eval_series(z)).sum::<C>()));
}

fn coefficients(c: &mut Criterion) {
    let sf = uneven_polygon(64);
    c.bench_function("fourier_coefficients_64x513", |b| {
        b.iter(|| fourier_coefficients(black_box(&sf), -256..=256))
    });
}

fn certification(c: &mut Criterion) {
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    for n in [6, 24] {
        let m = HarmonicStepMap::new(&uneven_polygon(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| certify(m, &CertifyConfig::default()))
        });
    }
    g.finish();
    let m = HarmonicStepMap::new(&uneven_polygon(24));
    c.bench_function("winding_0.99", |b| b.iter(|| winding_number(&m, 0.99, C::new(0.1, 0.05))));
}

fn schur(c: &mut Criterion) {
    let target = FnAnalytic(|z: C| 0.9 * (z + 0.3) / (1.0 + 0.3 * z));
    let mut g = c.benchmark_group("blaschke_truncation");
    for m in [4, 16] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| blaschke_truncation(&target, m).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, poisson, closed_form_vs_series, coefficients, certification, schur);
criterion_main!(benches);
