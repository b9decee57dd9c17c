//! Shared fixtures for the criterion benchmarks in `benches/`.

use leaper_core::*;

/// The mid-sized mixed space the benchmarks sample, train on, and adapt over.
pub fn bench_space() -> ConfigurationSpace {
    ConfigurationSpace::new(vec![
        OptimizationOption::ordinal("unroll", vec![1.0, 2.0, 4.0, 8.0]).unwrap(),
        OptimizationOption::binary("pipeline"),
        OptimizationOption::ordinal("freq_mhz", vec![100.0, 150.0, 200.0, 300.0]).unwrap(),
        OptimizationOption::categorical(
            "inline",
            vec!["off".into(), "partial".into(), "full".into()],
        )
        .unwrap(),
    ])
}

/// A source environment, its trained base model, and a related target's
/// five-shot sample — everything the adaptation benchmarks need.
pub struct Fixture {
    pub space: ConfigurationSpace,
    pub profile: ApplicationProfile,
    pub source: Dataset,
    pub base: BaseModel,
    pub shots: FewShotSet,
}

pub fn fixture() -> Fixture {
    let space = bench_space();
    let profile = gen_profile(9, 5);
    let src_params = SurfaceParams::sample(&space, 1009);
    let tgt_params =
        derive_related_env(&src_params, &RelatednessSpec::new(0.9, 1.0, 5009).unwrap());

    let plan = lhs_sample(&space, 50, 109).unwrap();
    let source =
        gen_environment("edge", &space, &profile, &src_params, Some(&plan.configurations))
            .unwrap();
    let shot_plan = lhs_sample(&space, 5, 209).unwrap();
    let shots_data =
        gen_environment("cloud", &space, &profile, &tgt_params, Some(&shot_plan.configurations))
            .unwrap();

    let d = profile.len() + space.encoded_len();
    let base = train_base_model(
        &source,
        Metric::ExecTimeMs,
        &HyperGrid::default_for(d),
        5,
        8,
        309,
    )
    .unwrap();
    let shots = FewShotSet::new("cloud", shots_data.samples).unwrap();
    Fixture { space, profile, source, base, shots }
}
