use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use evifuse_core::data::{generate_synthetic, SyntheticSpec};
use evifuse_core::dirichlet::{holder_divergence, holder_divergence_with_grad, kl_divergence};
use evifuse_core::opinions::{combine_all, FusionTape};
use evifuse_core::specfun::digamma;
use evifuse_core::trainer::{sample_loss_and_grad, Architecture};
use evifuse_core::{DirichletParams, DivergenceKind, HolderExponent, Opinion};

fn concentration(k: usize, shift: f64) -> DirichletParams {
    DirichletParams::new((0..k).map(|i| 1.0 + shift + 0.37 * i as f64).collect()).unwrap()
}

fn divergences(c: &mut Criterion) {
    let mut group = c.benchmark_group("divergence");
    let h = HolderExponent::new(1.7).unwrap();
    for k in [3, 10, 100] {
        let (p, q) = (concentration(k, 0.5), concentration(k, 2.0));
        group.bench_with_input(BenchmarkId::new("holder", k), &k, |b, _| {
            b.iter(|| holder_divergence(black_box(&p), black_box(&q), h).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("holder_with_grad", k), &k, |b, _| {
            b.iter(|| holder_divergence_with_grad(black_box(&p), black_box(&q), h).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kl", k), &k, |b, _| {
            b.iter(|| kl_divergence(black_box(&p), black_box(&q)).unwrap())
        });
    }
    group.finish();
}

fn special_functions(c: &mut Criterion) {
    c.bench_function("digamma/small", |b| b.iter(|| digamma(black_box(0.37)).unwrap()));
    c.bench_function("digamma/large", |b| b.iter(|| digamma(black_box(123.4)).unwrap()));
}

fn fusion(c: &mut Criterion) {
    let mut group = c.benchmark_group("fusion");
    for m in [2, 4, 8] {
        let opinions: Vec<Opinion> = (0..m)
            .map(|i| {
                let beliefs = vec![0.1 + 0.05 * i as f64, 0.2, 0.15, 0.05];
                let u = 1.0 - beliefs.iter().sum::<f64>();
                Opinion::new(beliefs, u).unwrap()
            })
            .collect();
        group.bench_with_input(BenchmarkId::new("combine_all", m), &m, |b, _| {
            b.iter(|| combine_all(black_box(&opinions)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("tape_record", m), &m, |b, _| {
            b.iter(|| FusionTape::record(black_box(&opinions)).unwrap())
        });
    }
    group.finish();
}

fn training_step(c: &mut Criterion) {
    let ds = generate_synthetic(&SyntheticSpec::complementary_toy(0)).unwrap();
    let model = Architecture::for_dataset(&ds, &[16], Some(vec![16]), 0)
        .unwrap()
        .init()
        .unwrap();
    let kind = DivergenceKind::holder(1.7).unwrap();
    let x = ds.sample(0);
    let label = ds.labels()[0];
    c.bench_function("sample_loss_and_grad", |b| {
        b.iter(|| sample_loss_and_grad(&model, black_box(&x), label, 0.5, kind).unwrap())
    });
}

criterion_group!(benches, divergences, special_functions, fusion, training_step);
criterion_main!(benches);
