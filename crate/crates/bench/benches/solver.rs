use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spca_bench::{random_matrix, random_psd};
use spca_core::linalg::sym_eigen;
use spca_core::{
    build_sphere_net, candidate_solution, gen_bigraph, max_weight_perfect_matching, solve_multi_spca, svd_sketch,
    sym_eig_truncated, SolverConfig,
};

fn matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching");
    for &(d, k, s) in &[(50, 2, 5), (200, 3, 10), (500, 5, 20)] {
        let w = random_matrix(d, k, 1);
        let g = gen_bigraph(w.view(), s).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("d{d}_k{k}_s{s}")), &g, |b, g| {
            b.iter(|| max_weight_perfect_matching(black_box(g)))
        });
    }
    group.finish();
}

fn candidate(c: &mut Criterion) {
    let w = random_matrix(200, 3, 2);
    c.bench_function("candidate_solution/d200_k3_s10", |b| {
        b.iter(|| candidate_solution(black_box(w.view()), 10).unwrap())
    });
}

fn eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eigen");
    for d in [32, 128] {
        let a = random_psd(d, d, 3);
        group.bench_with_input(BenchmarkId::from_parameter(d), &a, |b, a| {
            b.iter(|| sym_eigen(black_box(a.values().view())))
        });
    }
    group.finish();
}

fn net(c: &mut Criterion) {
    c.bench_function("sphere_net/r4_eps0.5", |b| {
        b.iter(|| build_sphere_net(black_box(4), 0.5).unwrap())
    });
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let a = random_psd(60, 30, 4);
    let factor = svd_sketch(&a, 3).unwrap().factor().unwrap();
    for workers in [1, 4] {
        let mut cfg = SolverConfig::new(2, 5, 0.8);
        cfg.workers = workers;
        group.bench_with_input(BenchmarkId::new("d60_r3_k2_s5", workers), &cfg, |b, cfg| {
            b.iter(|| solve_multi_spca(&factor, &a, cfg).unwrap())
        });
    }
    let full = sym_eig_truncated(&a, Some(2), 1e-12).unwrap();
    let cfg = SolverConfig::new(2, 5, 0.6);
    group.bench_function("d60_r2_k2_s5", |b| {
        b.iter(|| solve_multi_spca(&full, &a, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matching, candidate, eigen, net, solve);
criterion_main!(benches);
