//! Benchmarks for the stages a caller pays for repeatedly: design sampling,
//! base-model training, few-shot adaptation, whole-space prediction, and the
//! relatedness metrics.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use leaper_bench::{bench_space, fixture};
use leaper_core::*;

fn bench_lhs(c: &mut Criterion) {
    let space = bench_space();
    c.bench_function("lhs_sample_50", |b| {
        b.iter(|| lhs_sample(black_box(&space), 50, 7).unwrap())
    });
}

fn bench_train_base(c: &mut Criterion) {
    let fx = fixture();
    let d = fx.profile.len() + fx.space.encoded_len();
    let grid = HyperGrid::default_for(d);
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function("base_model_50_rows", |b| {
        b.iter(|| {
            train_base_model(black_box(&fx.source), Metric::ExecTimeMs, &grid, 5, 8, 309)
                .unwrap()
        })
    });
    group.finish();
}

fn bench_transfer(c: &mut Criterion) {
    let fx = fixture();
    let options = TransferOptions::default();
    let mut group = c.benchmark_group("transfer");
    group.sample_size(10);
    group.bench_function("five_shot_adaptation", |b| {
        b.iter(|| {
            transfer(black_box(&fx.base), &fx.shots, &fx.source, &options).unwrap()
        })
    });
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let fx = fixture();
    let configs: Vec<Configuration> = fx.space.enumerate().collect();
    c.bench_function("predict_base_full_space", |b| {
        b.iter(|| {
            configs
                .iter()
                .map(|cfg| predict_base(&fx.base, &fx.profile, black_box(cfg)).unwrap())
                .sum::<f64>()
        })
    });
}

fn bench_gp(c: &mut Criterion) {
    let fx = fixture();
    let rows = augment(&fx.base, &fx.source.samples).unwrap();
    c.bench_function("fit_gp_50_rows", |b| {
        b.iter_batched(
            || rows.clone(),
            |rows| fit_gp(black_box(&rows), GpKernelParams::default()).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_jsd(c: &mut Criterion) {
    let space = bench_space();
    let profile = gen_profile(9, 5);
    let params = SurfaceParams::sample(&space, 1009);
    let tgt = derive_related_env(&params, &RelatednessSpec::new(0.8, 1.0, 42).unwrap());
    let a = gen_environment("edge", &space, &profile, &params, None).unwrap();
    let b_env = gen_environment("cloud", &space, &profile, &tgt, None).unwrap();
    let p = a.require_metric(Metric::ExecTimeMs).unwrap();
    let q = b_env.require_metric(Metric::ExecTimeMs).unwrap();
    c.bench_function("jsd_full_space", |b| {
        b.iter(|| {
            let spec = HistogramSpec::union_range(32, black_box(&p), &q).unwrap();
            jsd(&p, &q, &spec).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_lhs,
    bench_train_base,
    bench_transfer,
    bench_predict,
    bench_gp,
    bench_jsd
);
criterion_main!(benches);
