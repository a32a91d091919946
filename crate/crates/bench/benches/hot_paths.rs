//! Benchmarks for the per-observation and per-exceedance hot paths: the
//! reduced and functional samplers, the test statistics, the normal
//! quantile, and the efficiency-curve quadrature.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use gpptest::exceedance::{simulate, simulate_functional};
use gpptest::special::{psi, std_normal_quantile, QuadratureSettings};
use gpptest::teststats::{loglik_ratio, omnibus_statistic, optimal_test_delta};
use gpptest::wmodel::DeltaModel;
use gpptest::{ExceedanceSample, GeneratorModel, InfLaw, RandomStream, TestSide, WFamily, WModel};

fn mixture_law() -> InfLaw {
    InfLaw::new(vec![(0.5, 0.25), (1.0, 0.75)]).unwrap()
}

/// A deterministic sample with `tau` exceedances for statistic benchmarks.
fn fixed_sample(tau: usize) -> ExceedanceSample {
    let ys: Vec<f64> = (0..tau).map(|k| (k as f64 + 0.5) / tau as f64).collect();
    ExceedanceSample::new(tau * 20, -0.05, ys).unwrap()
}

fn bench_reduced_sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_reduced");
    let n = 10_000;
    group.throughput(Throughput::Elements(n as u64));

    let law = mixture_law();
    let uniform = WModel::Uniform01;
    group.bench_function("uniform_null", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            let mut rng = RandomStream::substream(0xBE7C_0001, rep);
            simulate(n, -0.05, &uniform, &law, &mut rng).unwrap()
        })
    });

    let tilted = WModel::Delta(DeltaModel::with_default_cutoff(1.0, 1.5).unwrap());
    group.bench_function("delta_alternative", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            let mut rng = RandomStream::substream(0xBE7C_0002, rep);
            simulate(n, -0.05, &tilted, &law, &mut rng).unwrap()
        })
    });
    group.finish();
}

fn bench_functional_sampler(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_functional");
    let n = 100;
    let grid: Vec<f64> = (0..512).map(|i| i as f64 / 511.0).collect();
    let generator = GeneratorModel::SinePhase { amplitude: 0.5 };
    group.throughput(Throughput::Elements((n * grid.len()) as u64));
    group.bench_function("sine_512_nodes", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            let mut rng = RandomStream::substream(0xBE7C_0003, rep);
            simulate_functional(
                n,
                -0.05,
                &WModel::Uniform01,
                &generator,
                &grid,
                -1.0,
                &mut rng,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn bench_statistics(c: &mut Criterion) {
    let mut group = c.benchmark_group("statistics");
    let sample = fixed_sample(1_000);
    group.throughput(Throughput::Elements(sample.tau() as u64));
    group.bench_function("omnibus_1000_values", |b| {
        b.iter(|| omnibus_statistic(black_box(&sample)).unwrap())
    });
    group.bench_function("optimal_delta_1000_values", |b| {
        b.iter(|| optimal_test_delta(black_box(&sample), 1.0, 1.0, 0.05, TestSide::Upper).unwrap())
    });
    let family = WFamily::Delta {
        delta: 1.0,
        u0: 0.5,
    };
    let law = mixture_law();
    group.bench_function("loglik_ratio_1000_values", |b| {
        b.iter(|| loglik_ratio(black_box(&sample), 0.8, &family, &law).unwrap())
    });
    group.finish();
}

fn bench_special_functions(c: &mut Criterion) {
    let mut group = c.benchmark_group("special");
    let ps: Vec<f64> = (1..1000).map(|k| k as f64 / 1000.0).collect();
    group.throughput(Throughput::Elements(ps.len() as u64));
    group.bench_function("normal_quantile_sweep", |b| {
        b.iter_batched(
            || ps.clone(),
            |ps| {
                let mut acc = 0.0;
                for p in ps {
                    acc += std_normal_quantile(black_box(p)).unwrap();
                }
                acc
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();

    let mut group = c.benchmark_group("quadrature");
    let settings = QuadratureSettings::default();
    group.bench_function("psi_integral", |b| {
        b.iter(|| psi(black_box(0.7), &settings).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_reduced_sampler,
    bench_functional_sampler,
    bench_statistics,
    bench_special_functions
);
criterion_main!(benches);
