use criterion::{criterion_group, criterion_main, Criterion};
use rmt_core::ensembles::EnsembleSpec;
use rmt_core::harness::{analytic_curve, run_monte_carlo, run_monte_carlo_seq, SampleSource};

fn bench_monte_carlo(c: &mut Criterion) {
    let spec = EnsembleSpec::Quotient { n: 4, n_a: 8, n_b: 9, a: 1.0, b: 0.5 };
    let mut group = c.benchmark_group("monte_carlo_2000_trials");
    group.sample_size(10);
    group.bench_function("parallel", |bch| {
        bch.iter(|| {
            run_monte_carlo(&SampleSource::Composite(&spec), 1, 2_000, 0.0, 40.0, 64).unwrap()
        })
    });
    group.bench_function("sequential", |bch| {
        bch.iter(|| {
            run_monte_carlo_seq(&SampleSource::Composite(&spec), 1, 2_000, 0.0, 40.0, 64).unwrap()
        })
    });
    group.finish();
}

fn bench_analytic_curve(c: &mut Criterion) {
    // with the default `parallel` feature the grid maps over rayon;
    // build with --no-default-features to benchmark the sequential path
    let spec = EnsembleSpec::Quotient { n: 4, n_a: 14, n_b: 9, a: 1.0, b: 0.5 };
    let sys = spec.build().unwrap();
    let grid: Vec<f64> = (0..200).map(|i| 0.05 + 12.0 * i as f64 / 199.0).collect();
    let mut group = c.benchmark_group("analytic_curve_200_points");
    group.sample_size(10);
    group.bench_function("marginal_density_grid", |bch| {
        bch.iter(|| analytic_curve(&sys, &grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_monte_carlo, bench_analytic_curve);
criterion_main!(benches);
