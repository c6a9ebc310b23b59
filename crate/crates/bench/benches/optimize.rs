use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rsma_bench::miso;
use rsma_core::optimize::{optimize, optimize_powers_fixed_directions, OptimizerConfig};
use rsma_core::{build_layout, LayoutOptions, Metric, SchemeKind};

fn grid_tier(c: &mut Criterion) {
    let ch = miso(3, 4, 2);
    let layout = build_layout(SchemeKind::OneLayerRS, 2, &[1, 1], &LayoutOptions::default()).unwrap();
    let metric = Metric::sum_rate(2);
    c.bench_function("grid_rs_k2_101", |b| {
        b.iter(|| optimize_powers_fixed_directions(black_box(&ch), &layout, &metric, 100.0, 101).unwrap())
    });
}

fn refine_tier(c: &mut Criterion) {
    let ch = miso(4, 4, 3);
    let layout = build_layout(SchemeKind::OneLayerRS, 3, &[1; 3], &LayoutOptions::default()).unwrap();
    let metric = Metric::mmf();
    let cfg = OptimizerConfig { iters: 100, ..OptimizerConfig::default() };
    let mut group = c.benchmark_group("refine");
    group.sample_size(10);
    group.bench_function("rs_k3_mmf_100iters", |b| b.iter(|| optimize(black_box(&ch), &layout, &metric, 100.0, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, grid_tier, refine_tier);
criterion_main!(benches);
