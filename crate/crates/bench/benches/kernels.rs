use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fml_bench::{measure, point_pair, GEOMETRIES};
use fml_core::geometry::dist;
use fml_core::hmin::hmin_bruteforce;
use fml_core::solver::median_solve;
use fml_core::{HminInstance, SolverConfig};

fn bench_dist(c: &mut Criterion) {
    let mut group = c.benchmark_group("dist");
    for g in GEOMETRIES {
        let (space, p, q) = point_pair(g, 1.0).unwrap();
        group.bench_function(BenchmarkId::from_parameter(g.name()), |b| {
            b.iter(|| dist(&space, black_box(&p), black_box(&q)).unwrap())
        });
    }
    group.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("median_solve");
    group.sample_size(20);
    let cfg = SolverConfig::default();
    for g in GEOMETRIES {
        for n in [5, 50] {
            let mu = measure(g, n, 7).unwrap();
            group.bench_function(BenchmarkId::new(g.name(), n), |b| {
                b.iter(|| median_solve(black_box(&mu), &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_hmin(c: &mut Criterion) {
    let mut group = c.benchmark_group("hmin_bruteforce");
    group.sample_size(20);
    for g in GEOMETRIES {
        let inst = HminInstance::new(g, 1.0, 0.5, 0.9).unwrap();
        group.bench_function(BenchmarkId::from_parameter(g.name()), |b| {
            b.iter(|| hmin_bruteforce(black_box(&inst), 100_000).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_dist, bench_solve, bench_hmin);
criterion_main!(benches);
