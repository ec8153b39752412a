use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phipp::densities::KernelDensity;
use phipp::gof::elliptical_copula_test;
use phipp::pursuit::{empirical_divergence, find_direction};
use phipp::{PhiSpec, PursuitConfig, TestSettings};
use phipp_bench::{rng, sim1, sim1_state};

fn kde(c: &mut Criterion) {
    let mut group = c.benchmark_group("kde_pdf");
    for n in [200, 1000, 5000] {
        let data = sim1(n, 1);
        let points: Vec<f64> = data.transpose().iter().copied().collect();
        let k = KernelDensity::fit_rows(&points, 2).unwrap();
        let probes: Vec<[f64; 2]> = (0..100).map(|i| [i as f64 * 0.05 - 2.5, i as f64 * 0.02]).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &k, |b, k| {
            b.iter(|| probes.iter().map(|p| k.pdf(black_box(p))).sum::<f64>())
        });
    }
    group.finish();
}

fn criterion_value(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_divergence");
    for n in [50, 500] {
        let state = sim1_state(n, PhiSpec::ChiSquare, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| empirical_divergence(s, black_box(&[0.6, 0.8])).unwrap())
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let state = sim1_state(50, PhiSpec::ChiSquare, 3);
    let opt = PursuitConfig::default().optimizer;
    c.bench_function("find_direction/50", |b| b.iter(|| find_direction(&state, &opt, &mut rng(4)).unwrap()));
}

fn full_test(c: &mut Criterion) {
    let data = sim1(50, 5);
    c.bench_function("elliptical_copula_test/sim1_50", |b| {
        b.iter(|| {
            elliptical_copula_test(
                &data,
                PhiSpec::ChiSquare,
                &TestSettings::default(),
                &PursuitConfig::default(),
                &mut rng(6),
            )
            .unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = kde, criterion_value, search, full_test
}
criterion_main!(benches);
