use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ghcert_core::foliation::{leaf_space, sample_hopf};
use ghcert_core::generators::{random_euclidean, sphere_random};
use ghcert_core::gh::{gh_oracle_exact, upper_bound_via_nets, SearchBudget};
use ghcert_core::metric::diameter;
use ghcert_core::nets::{covering_number, greedy_cover, greedy_packing, packing_number};
use ghcert_core::{LeafSpaceMode, SolveMode};

fn exact_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for n in [12, 18, 24] {
        let m = random_euclidean(n, 2, n as u64);
        let eps = 0.2 * diameter(&m);
        g.bench_with_input(BenchmarkId::new("cover", n), &m, |b, m| {
            b.iter(|| covering_number(m, black_box(eps), SolveMode::Exact).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pack", n), &m, |b, m| {
            b.iter(|| packing_number(m, black_box(eps), SolveMode::Exact).unwrap())
        });
    }
    g.finish();
}

fn greedy_solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("greedy");
    g.sample_size(20);
    for n in [1_000, 4_000] {
        let s = sphere_random(n, 1);
        g.bench_with_input(BenchmarkId::new("cover", n), &s, |b, s| {
            b.iter(|| greedy_cover(s, black_box(0.1)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pack", n), &s, |b, s| {
            b.iter(|| greedy_packing(s, black_box(0.1)).unwrap())
        });
    }
    g.finish();
}

fn gh_bounds(c: &mut Criterion) {
    let x = random_euclidean(4, 2, 1);
    let y = random_euclidean(4, 2, 2);
    c.bench_function("gh/oracle 4x4", |b| b.iter(|| gh_oracle_exact(&x, &y).unwrap()));
    let x = sphere_random(200, 3);
    let y = sphere_random(200, 4);
    let mut g = c.benchmark_group("gh");
    g.sample_size(10);
    g.bench_function("nets k=8", |b| b.iter(|| upper_bound_via_nets(&x, &y, 8, SearchBudget::default(), 0).unwrap()));
    g.finish();
}

fn leaf_spaces(c: &mut Criterion) {
    let s = sample_hopf(100, 20, 0).unwrap();
    let mut g = c.benchmark_group("leaf_space");
    g.sample_size(10);
    g.bench_function("hopf chain", |b| b.iter(|| leaf_space(&s, LeafSpaceMode::ChainInfimum).unwrap()));
    g.bench_function("hopf hausdorff", |b| b.iter(|| leaf_space(&s, LeafSpaceMode::LeafwiseHausdorff).unwrap()));
    g.finish();
}

criterion_group!(benches, exact_solvers, greedy_solvers, gh_bounds, leaf_spaces);
criterion_main!(benches);
