//! Golden-file checks for the shipped example data under `examples/`.
//!
//! Each golden file was produced by the code under test and committed; these
//! tests regenerate the artifacts and demand byte equality, pinning the
//! sampler's permutation stream and the synthetic generator's label stream
//! across refactors. Set `GOLDEN_WRITE=1` to re-mint after an intentional
//! format change.

use std::fs;
use std::path::PathBuf;

use leaper_core::*;

fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples")
}

fn check_or_mint(name: &str, generate: impl FnOnce(&std::path::Path)) {
    let golden = examples_dir().join(name);
    let fresh = tempfile::tempdir().unwrap().path().join(name);
    fs::create_dir_all(fresh.parent().unwrap()).unwrap();
    generate(&fresh);
    if std::env::var("GOLDEN_WRITE").is_ok() {
        fs::copy(&fresh, &golden).unwrap();
        return;
    }
    let expected = fs::read(&golden)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", golden.display()));
    let actual = fs::read(&fresh).unwrap();
    assert_eq!(
        actual,
        expected,
        "regenerated {name} differs from the committed golden file"
    );
}

fn shipped_space() -> ConfigurationSpace {
    read_space(&examples_dir().join("space_full.json")).unwrap()
}

#[test]
fn shipped_space_cardinality_matches_exhaustive_enumeration() {
    let space = shipped_space();
    assert_eq!(space.options.len(), 8);
    let enumerated = space.enumerate().count();
    assert_eq!(space.cardinality(), enumerated as u128);
    assert_eq!(space.cardinality(), 5376);
}

#[test]
fn shipped_profile_and_space_assemble_to_the_expected_length() {
    let space = shipped_space();
    let profile = gen_profile(0, 5);
    let config = space.config_from_index(0);
    let x = assemble_features(&profile, &config, &space).unwrap();
    assert_eq!(x.len(), profile.len() + space.encoded_len());
    assert_eq!(space.encoded_len(), 10); // 5 scalar options + 3-way one-hot + 2 binaries
}

#[test]
fn two_option_plan_matches_its_golden_file() {
    let space = ConfigurationSpace::new(vec![
        OptimizationOption::binary("PL"),
        OptimizationOption::ordinal("FR", vec![50.0, 100.0, 150.0, 200.0]).unwrap(),
    ]);
    let plan = lhs_sample(&space, 8, 7).unwrap();

    // Marginals forced by stratification: PL 4/4, FR 2/2/2/2.
    let occupancy = stratification_report(&plan);
    assert_eq!(occupancy[0], vec![4, 4]);
    assert_eq!(occupancy[1], vec![2, 2, 2, 2]);

    check_or_mint("plan_pl_fr_n8_s7.json", |path| write_plan(&plan, path).unwrap());
}

#[test]
fn shipped_surface_params_regenerate_the_golden_labeled_csv() {
    let space = shipped_space();
    let params = read_surface(&examples_dir().join("surface_edge.json")).unwrap();
    params.validate(&space).unwrap();

    let plan = lhs_sample(&space, 64, 7).unwrap();
    let profile = gen_profile(0, 5);
    let dataset =
        gen_environment("edge", &space, &profile, &params, Some(&plan.configurations))
            .unwrap();
    check_or_mint("env_edge_golden.csv", |path| write_dataset(&dataset, path).unwrap());
}

#[test]
fn shipped_space_file_is_in_canonical_form() {
    check_or_mint("space_full.json", |path| write_space(&shipped_space(), path).unwrap());
}

#[test]
fn shipped_surface_file_is_in_canonical_form() {
    let params = read_surface(&examples_dir().join("surface_edge.json")).unwrap();
    check_or_mint("surface_edge.json", |path| write_surface(&params, path).unwrap());
}
