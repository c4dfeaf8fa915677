//! Timings for the hot paths: bounded Dijkstra, contraction profiles,
//! divergence sweeps and detour bounds.

use criterion::{criterion_group, criterion_main, Criterion};
use geocontract::divergence::{divergence_profile, DivergenceParams, SGrid};
use geocontract::function::FunctionSpec;
use geocontract::morse::detour_bound;
use geocontract::projection::{contraction_profile, ProjectionParams};
use geocontract::sampling::{rounded_geometric_grid, SamplingPlan};
use geocontract::search::Workspace;
use geocontract::spaces::{divergence_necklace, grid_l1, necklace};
use std::hint::black_box;

fn sssp(c: &mut Criterion) {
    let s = grid_l1(400, 200).unwrap();
    let mut ws = Workspace::new();
    c.bench_function("sssp grid 400x200", |b| {
        b.iter(|| {
            let mut settled = 0usize;
            ws.run(&s.graph, &[(black_box(40_100), 0.0)], f64::INFINITY, |_| true, |_, _| {
                settled += 1;
                true
            });
            settled
        })
    });
}

fn contraction(c: &mut Criterion) {
    let s = necklace(&FunctionSpec::ceil_sqrt(), 4, 60).unwrap();
    let mut g = c.benchmark_group("contraction");
    g.sample_size(10);
    g.bench_function("necklace 4..60 exhaustive", |b| {
        b.iter(|| {
            contraction_profile(&s, ProjectionParams::default(), &FunctionSpec::Identity, s.valid_radius(), SamplingPlan::Exhaustive)
                .unwrap()
        })
    });
    g.finish();
}

fn divergence(c: &mut Criterion) {
    let s = divergence_necklace(&FunctionSpec::power(2.0), 1, 30).unwrap();
    let dp = DivergenceParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
    let rs = rounded_geometric_grid(2.0, s.valid_radius(), 4, 1.0);
    let mut g = c.benchmark_group("divergence");
    g.sample_size(10);
    g.bench_function("divergence necklace 1..30 stride 8", |b| {
        b.iter(|| divergence_profile(&s, &dp, &rs, &SGrid::Stride { step: 8 }).unwrap())
    });
    g.finish();
}

fn detour(c: &mut Criterion) {
    let s = grid_l1(120, 60).unwrap();
    let ys = s.y.members().to_vec();
    c.bench_function("detour bound grid sep 30 L 2", |b| b.iter(|| detour_bound(&s, ys[10], ys[40], black_box(2.0)).unwrap()));
}

criterion_group!(benches, sssp, contraction, divergence, detour);
criterion_main!(benches);
