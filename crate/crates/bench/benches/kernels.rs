use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qstrat_bench::{circle, cloud};
use qstrat_core::jones::{jones_beta, jones_beta_bruteforce, Gate};
use qstrat_core::kdtree::KdTree;
use qstrat_core::measure::Measure;
use qstrat_core::stratify::union_volume;
use qstrat_core::symmetry::{detect_symmetry, SymmetryParams};
use qstrat_core::synth::gen_k_symmetric_cone;

fn mass_in_ball(c: &mut Criterion) {
    let mut g = c.benchmark_group("mass_in_ball");
    for count in [1_000, 10_000, 100_000] {
        let mu = cloud(4, count, 1);
        let x = [0.1, -0.2, 0.0, 0.3];
        g.bench_with_input(BenchmarkId::from_parameter(count), &mu, |b, mu| {
            b.iter(|| mu.mass_in_ball(black_box(&x), 0.25).unwrap())
        });
    }
    g.finish();
}

fn kdtree(c: &mut Criterion) {
    let mu = cloud(3, 50_000, 2);
    let coords = mu.coords().to_vec();
    c.bench_function("kdtree/build_50k", |b| b.iter(|| KdTree::build(3, black_box(&coords))));
    let tree = KdTree::build(3, &coords);
    c.bench_function("kdtree/query_ball_50k", |b| b.iter(|| tree.query_ball(black_box(&[0.0, 0.0, 0.0]), 0.2).len()));
    c.bench_function("kdtree/nearest_50k", |b| b.iter(|| tree.nearest(black_box(&[0.3, 0.3, 0.3]), None)));
}

fn jones(c: &mut Criterion) {
    let mut g = c.benchmark_group("jones_beta");
    for n in [3, 6] {
        let mu = cloud(n, 20_000, 3);
        let x = vec![0.0; n];
        g.bench_with_input(BenchmarkId::new("moments", n), &mu, |b, mu| {
            b.iter(|| jones_beta(mu, black_box(&x), 0.5, 1, Gate::Practical(0.0)).unwrap().value)
        });
    }
    let small = cloud(3, 40, 4);
    g.bench_function("bruteforce_40", |b| {
        b.iter(|| jones_beta_bruteforce(&small, black_box(&[0.0, 0.0, 0.0]), 1.0, 1).unwrap())
    });
    g.finish();
}

fn symmetry(c: &mut Criterion) {
    let cone = gen_k_symmetric_cone(6, 1, 1.0).unwrap().measure;
    let params = SymmetryParams::new(0.1);
    let x = vec![0.0; 6];
    let mut g = c.benchmark_group("detect_symmetry");
    g.sample_size(10);
    for k in [0, 1] {
        g.bench_with_input(BenchmarkId::new("cone_n6_k1", k), &k, |b, &k| {
            b.iter(|| detect_symmetry(&cone, black_box(&x), 1.0, k, &params).unwrap().is_some())
        });
    }
    g.finish();
}

fn union(c: &mut Criterion) {
    let mut g = c.benchmark_group("union_volume");
    g.sample_size(10);
    for count in [64, 256] {
        let pts = circle(3, count);
        g.bench_with_input(BenchmarkId::from_parameter(count), &pts, |b, pts| {
            b.iter(|| union_volume(black_box(pts), 0.05, 0.01, None))
        });
    }
    g.finish();
}

criterion_group!(kernels, mass_in_ball, kdtree, jones, symmetry, union);
criterion_main!(kernels);
