use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use runs_core::longest::{all_roots, exceed_exact, exceed_exact_rational, f_series, root_w0, second_approx};
use runs_core::moments::pmf_g_all;
use runs_core::oracle::{simulate, SimConfig};
use runs_core::portmanteau::{run_distribution, LawTable};
use runs_core::{BigRational, NamedFunctional};

fn longest(c: &mut Criterion) {
    let mut g = c.benchmark_group("longest");
    for n in [1_000u64, 10_000, 100_000] {
        g.bench_with_input(BenchmarkId::new("recursion_f64", n), &n, |b, &n| {
            b.iter(|| exceed_exact(black_box(n), 13, &0.5))
        });
    }
    let half = BigRational::new(1.into(), 2.into());
    g.bench_function("recursion_rational_10000", |b| {
        b.iter(|| exceed_exact_rational(black_box(10_000), 13, &half))
    });
    g.bench_function("series_f64_10000", |b| b.iter(|| f_series(black_box(10_000), 13, 0.5)));
    g.bench_function("dominant_root_approx", |b| {
        b.iter(|| second_approx(black_box(10_000), 13, 0.5).unwrap())
    });
    g.finish();
}

fn roots(c: &mut Criterion) {
    c.bench_function("root_w0_cached", |b| b.iter(|| root_w0(black_box(9), 0.37).unwrap()));
    c.bench_function("all_roots_20", |b| b.iter(|| all_roots(black_box(20), 0.37).unwrap()));
}

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    for n in [16usize, 32, 48] {
        g.bench_with_input(BenchmarkId::new("run_distribution", n), &n, |b, &n| {
            b.iter(|| run_distribution(black_box(n), 0.5).unwrap())
        });
    }
    g.bench_function("law_table_to_40", |b| {
        b.iter(|| LawTable::runs(0.4).unwrap().law(black_box(40)).unwrap())
    });
    g.finish();
}

fn pmf(c: &mut Criterion) {
    let mut g = c.benchmark_group("pmf_g");
    for (n, len) in [(200u64, 3u32), (2_000, 10), (10_000, 10)] {
        g.bench_with_input(BenchmarkId::new("all", format!("{n}_{len}")), &(n, len), |b, &(n, len)| {
            b.iter(|| pmf_g_all(black_box(n), len, 0.5))
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    for p in [0.5, 0.3] {
        let cfg = SimConfig {
            n: 10_000,
            p,
            trials: 4_096,
            seed: 1,
            workers: 1,
        };
        g.bench_with_input(BenchmarkId::new("n10000_4096_trials", p), &cfg, |b, cfg| {
            b.iter(|| simulate(cfg, &NamedFunctional::LongestBelow(13)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, longest, roots, engine, pmf, monte_carlo);
criterion_main!(benches);
