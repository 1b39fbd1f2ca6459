use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use giant_heom::bath::{bcf_analytic, bcf_imaginary_time, bcf_quadrature, trigamma, BathParams, Beta};
use giant_heom::expfit::{esprit_rates, fit_bcf, sample_signal, SamplingGrid};
use giant_heom::heom::{enumerate_hierarchy, HeomGenerator, Scaling};
use giant_heom::rwa_exact::{max_step, solve_green};
use giant_heom::Complex64;

fn special_functions(c: &mut Criterion) {
    let z = Complex64::new(0.37, 12.5);
    c.bench_function("trigamma", |b| b.iter(|| trigamma(black_box(z))));
    let thermal = BathParams { beta: Beta::Finite(1.0), ..BathParams::default() };
    c.bench_function("bcf_analytic_zero_t", |b| {
        b.iter(|| bcf_analytic(black_box(&BathParams::default()), black_box(37.0)))
    });
    c.bench_function("bcf_analytic_thermal", |b| b.iter(|| bcf_analytic(black_box(&thermal), black_box(37.0))));
    c.bench_function("bcf_imaginary_time", |b| b.iter(|| bcf_imaginary_time(black_box(&thermal), black_box(0.3))));
    let short = BathParams::with_delay_periods(1.0);
    c.bench_function("bcf_quadrature", |b| b.iter(|| bcf_quadrature(black_box(&short), black_box(3.0))));
}

fn fitting(c: &mut Criterion) {
    let samples: Vec<Complex64> = sample_signal(|t| (-0.3 * t).exp() * (2.0 * t).cos() + 0.5 * (-0.05 * t).exp(), 40.0, 801)
        .unwrap()
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    c.bench_function("esprit_rates_801", |b| b.iter(|| esprit_rates(black_box(&samples), 0.05, 3)));
    let p = BathParams::with_delay_periods(1.0);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("fit_bcf_one_period", |b| {
        b.iter(|| fit_bcf(black_box(&p), 1e-3, SamplingGrid::default_for(&p)))
    });
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let p = BathParams::with_delay_periods(1.0);
    let fit = fit_bcf(&p, 1e-3, SamplingGrid::default_for(&p)).unwrap();
    let space = enumerate_hierarchy(fit.real.len(), fit.imag.len(), 2, 5_000_000).unwrap();
    let generator = HeomGenerator::new(space, &fit, 1.0, Scaling::None).unwrap();
    let n = generator.state_len();
    let state: Vec<Complex64> = (0..n).map(|i| Complex64::new((i % 7) as f64, (i % 3) as f64) * 1e-3).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    c.bench_function("heom_generator_apply_depth2", |b| {
        b.iter(|| generator.apply(black_box(&state), &mut out))
    });
    let mut group = c.benchmark_group("green");
    group.sample_size(10);
    group.bench_function("solve_green_one_period", |b| {
        b.iter(|| solve_green(black_box(&p), 2.5 * p.tau, max_step(&p)))
    });
    group.finish();
}

criterion_group!(benches, special_functions, fitting, solvers);
criterion_main!(benches);
