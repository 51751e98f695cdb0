use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use overfit_core::numerics::{gauss_rule, lambert_w0_exp, prox_minimize, solve_a_minus_b_tanh, Derivs, QuadratureKind};
use std::hint::black_box;

fn gumbel(z: f64) -> Derivs {
    let e = (-z).exp();
    Derivs { value: z + e, d1: 1.0 - e, d2: e }
}

pub fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    let xs: Vec<f64> = (0..1000).map(|k| -30.0 + 0.07 * k as f64).collect();
    group.bench_function("lambert_w0_exp x1000", |b| {
        b.iter(|| xs.iter().map(|&x| lambert_w0_exp(black_box(x))).sum::<f64>())
    });
    group.bench_function("solve_a_minus_b_tanh x1000", |b| {
        b.iter(|| xs.iter().map(|&x| solve_a_minus_b_tanh(black_box(x), 0.7)).sum::<f64>())
    });
    group.bench_function("prox_minimize gumbel x1000", |b| {
        b.iter(|| xs.iter().map(|&x| prox_minimize(black_box(x * 0.1), 0.8, gumbel).unwrap()).sum::<f64>())
    });
    for order in [16, 64] {
        group.bench_with_input(BenchmarkId::new("gauss_rule hermite", order), &order, |b, &n| {
            b.iter(|| gauss_rule(QuadratureKind::Hermite, black_box(n)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
