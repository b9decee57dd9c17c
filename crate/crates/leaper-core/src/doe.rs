//! Design-of-experiments sampling: picks a small, well-spread subset of a
//! configuration space for labeling.
//!
//! The sampler is a Latin hypercube over the mixed discrete space: per
//! option, the n draws occupy n equal strata of the unit interval in a
//! seed-derived random permutation, and each stratum is quantized
//! proportionally onto the option's levels. Whole-row duplicates are repaired
//! by re-permuting the colliding rows through marginal-preserving column
//! swaps, with a without-replacement fill from unused configurations as the
//! final backstop. Requests larger than half the space are constructed as
//! the complement of a small excluded sample, which keeps the same balance
//! guarantees in the regime where collisions would otherwise dominate.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{Configuration, ConfigurationSpace};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};

/// A sampling plan: the configurations selected for labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct DoePlan {
    pub space: ConfigurationSpace,
    pub configurations: Vec<Configuration>,
    pub seed: u64,
}

const REPAIR_ROUNDS: usize = 64;
const ENUMERATION_CAP: u128 = 100_000;

/// Latin hypercube sample of `n` distinct configurations.
///
/// Deterministic for fixed `(space, n, seed)`. Per-option level occupancy is
/// balanced to within one row whenever n ≥ the option's level count, and is
/// exactly n/L per level when L divides n.
pub fn lhs_sample(space: &ConfigurationSpace, n: usize, seed: u64) -> Result<DoePlan> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    let cardinality = space.cardinality();
    if n as u128 > cardinality {
        return Err(Error::SpaceExhausted { requested: n, cardinality });
    }

    let mut rng = rng_from(derive_seed(seed, &[stream::DOE_ATTEMPT]));

    let mut rows = if n as u128 == cardinality {
        // The whole space admits exactly one duplicate-free plan up to order.
        space.enumerate().collect()
    } else if 2 * n as u128 > cardinality {
        // Tight regime: sample the complement instead. Excluding a balanced
        // set from the (exactly balanced) full enumeration keeps every
        // per-option occupancy within one row.
        let m = (cardinality - n as u128) as usize;
        let mut excluded_rng = rng_from(derive_seed(seed, &[stream::DOE_COMPLEMENT]));
        let excluded = stratified_rows(space, m, &mut excluded_rng)?;
        let excluded: std::collections::HashSet<Configuration> =
            excluded.into_iter().collect();
        space.enumerate().filter(|c| !excluded.contains(c)).collect()
    } else {
        stratified_rows(space, n, &mut rng)?
    };
    rows.shuffle(&mut rng);

    Ok(DoePlan { space: space.clone(), configurations: rows, seed })
}

/// Stratified draw of `n` distinct rows; requires n ≤ cardinality (callers
/// route tight requests through the complement path first).
fn stratified_rows(
    space: &ConfigurationSpace,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Configuration>> {
    // One column per option: a random permutation of the n strata, each
    // stratum quantized onto the option's levels.
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(space.options.len());
    for option in &space.options {
        let levels = option.level_count();
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        let column =
            strata.into_iter().map(|s| quantize_stratum(s, levels, n, rng)).collect();
        columns.push(column);
    }

    let mut rows: Vec<Configuration> = (0..n)
        .map(|j| Configuration::new(columns.iter().map(|c| c[j]).collect()))
        .collect();

    for _ in 0..REPAIR_ROUNDS {
        let colliding = colliding_rows(&rows);
        if colliding.is_empty() {
            return Ok(rows);
        }
        // Swap each colliding row's column entries with random partner rows;
        // swaps within a column preserve every per-option histogram exactly.
        for j in colliding {
            for k in 0..space.options.len() {
                let partner = rng.random_range(0..n);
                let level = rows[j].assignments[k];
                rows[j].assignments[k] = rows[partner].assignments[k];
                rows[partner].assignments[k] = level;
            }
        }
    }

    let colliding = colliding_rows(&rows);
    if !colliding.is_empty() {
        fill_without_replacement(space, &mut rows, &colliding, rng)?;
    }
    Ok(rows)
}

/// Maps stratum `s` of `n` onto one of `levels` levels.
///
/// For levels ≤ n this is the proportional integer quantization s·L/n, which
/// pins per-level occupancy to within one row. For levels > n each stratum
/// owns the disjoint level range [s·L/n, (s+1)·L/n) and draws uniformly
/// inside it, so the n rows get n distinct levels.
fn quantize_stratum(s: usize, levels: usize, n: usize, rng: &mut ChaCha8Rng) -> usize {
    if levels <= n {
        s * levels / n
    } else {
        let lo = (s * levels).div_ceil(n);
        let hi = ((s + 1) * levels).div_ceil(n);
        lo + rng.random_range(0..hi - lo)
    }
}

/// Indices of rows that duplicate an earlier row.
fn colliding_rows(rows: &[Configuration]) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut colliding = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        if !seen.insert(row.clone()) {
            colliding.push(j);
        }
    }
    colliding
}

/// Replaces the colliding rows with unused configurations. For enumerable
/// spaces the replacements are chosen greedily against per-option occupancy
/// caps; for huge spaces they are rejection-sampled (collisions there are
/// vanishingly rare to begin with).
fn fill_without_replacement(
    space: &ConfigurationSpace,
    rows: &mut [Configuration],
    colliding: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = rows.len();
    let cardinality = space.cardinality();
    let used: std::collections::HashSet<Configuration> = rows
        .iter()
        .enumerate()
        .filter(|(j, _)| !colliding.contains(j))
        .map(|(_, row)| row.clone())
        .collect();

    if cardinality <= ENUMERATION_CAP.max(2 * n as u128) {
        let mut pool: Vec<Configuration> =
            space.enumerate().filter(|c| !used.contains(c)).collect();
        let mut occupancy: Vec<Vec<usize>> = space
            .options
            .iter()
            .map(|o| vec![0usize; o.level_count()])
            .collect();
        for (j, row) in rows.iter().enumerate() {
            if !colliding.contains(&j) {
                for (k, &level) in row.assignments.iter().enumerate() {
                    occupancy[k][level] += 1;
                }
            }
        }
        let caps: Vec<usize> =
            space.options.iter().map(|o| n.div_ceil(o.level_count())).collect();
        for &j in colliding {
            let best = pool
                .iter()
                .enumerate()
                .min_by_key(|(_, c)| {
                    let mut overflow = 0usize;
                    let mut load = 0usize;
                    for (k, &level) in c.assignments.iter().enumerate() {
                        if occupancy[k][level] + 1 > caps[k] {
                            overflow += 1;
                        }
                        load += occupancy[k][level];
                    }
                    (overflow, load)
                })
                .map(|(i, _)| i)
                .expect("n ≤ cardinality guarantees an unused configuration");
            let chosen = pool.remove(best);
            for (k, &level) in chosen.assignments.iter().enumerate() {
                occupancy[k][level] += 1;
            }
            rows[j] = chosen;
        }
    } else {
        let mut used = used;
        for &j in colliding {
            let mut replacement = None;
            for _ in 0..10_000 {
                let index = rng.random_range(0..cardinality);
                let candidate = space.config_from_index(index);
                if !used.contains(&candidate) {
                    replacement = Some(candidate);
                    break;
                }
            }
            // Acceptance probability here exceeds 1/2, so exhausting the
            // retry budget is not reachable in practice.
            let candidate = replacement.ok_or_else(|| {
                Error::InvalidParameter("duplicate repair exhausted retries".into())
            })?;
            used.insert(candidate.clone());
            rows[j] = candidate;
        }
    }
    Ok(())
}

/// Per-option level-occupancy counts of a plan. Assignments out of range for
/// the plan's space are skipped (the report is diagnostic, not a validator).
pub fn stratification_report(plan: &DoePlan) -> Vec<Vec<usize>> {
    let mut counts: Vec<Vec<usize>> = plan
        .space
        .options
        .iter()
        .map(|o| vec![0usize; o.level_count()])
        .collect();
    for config in &plan.configurations {
        for (k, &level) in config.assignments.iter().enumerate() {
            if let Some(slot) = counts.get_mut(k).and_then(|c| c.get_mut(level)) {
                *slot += 1;
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::OptimizationOption;
    use proptest::prelude::*;

    fn fr4() -> ConfigurationSpace {
        ConfigurationSpace::new(vec![OptimizationOption::ordinal(
            "FR",
            vec![50.0, 100.0, 150.0, 200.0],
        )
        .unwrap()])
    }

    fn pl_fr() -> ConfigurationSpace {
        ConfigurationSpace::new(vec![
            OptimizationOption::binary("PL"),
            OptimizationOption::ordinal("FR", vec![50.0, 100.0, 150.0, 200.0]).unwrap(),
        ])
    }

    #[test]
    fn four_strata_hit_each_of_four_levels_once() {
        for seed in 0..20 {
            let plan = lhs_sample(&fr4(), 4, seed).unwrap();
            let report = stratification_report(&plan);
            assert_eq!(report, vec![vec![1, 1, 1, 1]], "seed {seed}");
        }
    }

    #[test]
    fn identical_inputs_give_identical_plans() {
        let a = lhs_sample(&pl_fr(), 6, 99).unwrap();
        let b = lhs_sample(&pl_fr(), 6, 99).unwrap();
        assert_eq!(a, b);
        let c = lhs_sample(&pl_fr(), 6, 100).unwrap();
        assert_ne!(a.configurations, c.configurations);
    }

    #[test]
    fn pl_fr_n8_marginals_are_exact() {
        let plan = lhs_sample(&pl_fr(), 8, 7).unwrap();
        let report = stratification_report(&plan);
        assert_eq!(report[0], vec![4, 4]);
        assert_eq!(report[1], vec![2, 2, 2, 2]);
        let mut rows = plan.configurations.clone();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 8, "whole space covered without duplicates");
    }

    #[test]
    fn rejects_zero_and_oversized_requests() {
        let err = lhs_sample(&fr4(), 0, 1).unwrap_err();
        assert!(err.to_string().contains("n must be ≥ 1"), "{err}");
        let err = lhs_sample(&fr4(), 5, 1).unwrap_err();
        assert!(matches!(err, Error::SpaceExhausted { requested: 5, cardinality: 4 }));
    }

    #[test]
    fn empty_space_has_one_configuration() {
        let space = ConfigurationSpace::new(vec![]);
        let plan = lhs_sample(&space, 1, 0).unwrap();
        assert_eq!(plan.configurations, vec![Configuration::new(vec![])]);
        assert!(lhs_sample(&space, 2, 0).is_err());
    }

    #[test]
    fn full_cardinality_request_covers_the_space() {
        let space = pl_fr();
        let plan = lhs_sample(&space, 8, 3).unwrap();
        let mut got = plan.configurations.clone();
        got.sort();
        let mut want: Vec<Configuration> = space.enumerate().collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_plan_report_is_all_zero() {
        let plan = DoePlan { space: pl_fr(), configurations: vec![], seed: 0 };
        assert_eq!(stratification_report(&plan), vec![vec![0, 0], vec![0, 0, 0, 0]]);
    }

    fn arb_option(index: usize) -> impl Strategy<Value = OptimizationOption> {
        prop_oneof![
            Just(OptimizationOption::binary(format!("b{index}"))),
            (2usize..7).prop_map(move |l| {
                OptimizationOption::ordinal(
                    format!("o{index}"),
                    (0..l).map(|i| i as f64).collect(),
                )
                .unwrap()
            }),
            (2usize..5).prop_map(move |l| {
                OptimizationOption::categorical(
                    format!("c{index}"),
                    (0..l).map(|i| format!("v{i}")).collect(),
                )
                .unwrap()
            }),
        ]
    }

    fn arb_space() -> impl Strategy<Value = ConfigurationSpace> {
        (1usize..4)
            .prop_flat_map(|count| {
                (0..count).map(arb_option).collect::<Vec<_>>()
            })
            .prop_map(ConfigurationSpace::new)
    }

    proptest! {
        #[test]
        fn plans_are_valid_distinct_and_stratified(
            space in arb_space(),
            n_raw in 1usize..40,
            seed in 0u64..1000,
        ) {
            let cardinality = space.cardinality() as usize;
            let n = n_raw.min(cardinality);
            let plan = lhs_sample(&space, n, seed).unwrap();
            prop_assert_eq!(plan.configurations.len(), n);
            for config in &plan.configurations {
                prop_assert!(space.validate_configuration(config).is_ok());
            }
            let mut distinct = plan.configurations.clone();
            distinct.sort();
            distinct.dedup();
            prop_assert_eq!(distinct.len(), n, "duplicates in plan");
            for (option, counts) in
                space.options.iter().zip(stratification_report(&plan))
            {
                let levels = option.level_count();
                prop_assert_eq!(counts.iter().sum::<usize>(), n);
                if levels <= n {
                    let max = *counts.iter().max().unwrap();
                    let min = *counts.iter().min().unwrap();
                    prop_assert!(
                        max - min <= 1,
                        "occupancy spread {}-{} for {} levels, n={}",
                        max, min, levels, n
                    );
                    if n % levels == 0 {
                        prop_assert!(counts.iter().all(|&c| c == n / levels));
                    }
                }
            }
        }
    }
}
