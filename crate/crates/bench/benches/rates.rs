use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rsma_bench::{axis_precoders, miso};
use rsma_core::ic2::optimize_t;
use rsma_core::schemes::evaluate;
use rsma_core::{build_layout, IcChannel, LayoutOptions, Metric, SchemeKind};

fn rate_evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate_1layer_rs");
    for k in [2usize, 4, 6] {
        let ch = miso(1, 4, k);
        let layout = build_layout(SchemeKind::OneLayerRS, k, &vec![1; k], &LayoutOptions::default()).unwrap();
        let pre = axis_precoders(4, k, 100.0);
        let metric = Metric::sum_rate(k);
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| {
            b.iter(|| evaluate(black_box(&ch), &layout, black_box(&pre), &metric).unwrap())
        });
    }
    group.finish();

    let ch = miso(2, 4, 3);
    let layout = build_layout(SchemeKind::GRS, 3, &[1; 3], &LayoutOptions::default()).unwrap();
    let pre = axis_precoders(4, 6, 100.0);
    let metric = Metric::mmf();
    c.bench_function("evaluate_grs_k3", |b| b.iter(|| evaluate(black_box(&ch), &layout, black_box(&pre), &metric).unwrap()));
}

fn ic2(c: &mut Criterion) {
    let ch = IcChannel::from_gains(1.0, 0.3, 1000.0).unwrap();
    c.bench_function("ic2_optimize_t_1001", |b| b.iter(|| optimize_t(black_box(&ch), 1001).unwrap()));
}

criterion_group!(benches, rate_evaluation, ic2);
criterion_main!(benches);
