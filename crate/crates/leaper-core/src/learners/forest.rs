//! Bagged random forest over CART trees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_regression_tree, RegressionTree, TreeNode};
use super::{check_training_inputs, TreeParams};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};
use rand::Rng;

/// Bagging ensemble. Prediction is the exact arithmetic mean of the member
/// tree predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
    pub n_trees: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Per-feature split-gain shares of a fitted forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// Nonnegative scores summing to 1.
    pub scores: Vec<f64>,
    /// True when no tree in the forest ever split (scores are then the
    /// uninformative uniform 1/d).
    pub no_splits: bool,
}

/// Fits `n_trees` CART trees, each on a bootstrap resample of the rows (with
/// replacement, original size) when `bootstrap` is set, else on the full
/// set. Tree construction randomness comes from per-tree streams derived
/// from (seed, tree index), so the result is identical for any thread count.
pub fn fit_random_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &TreeParams,
    n_trees: usize,
    bootstrap: bool,
    seed: u64,
) -> Result<RandomForest> {
    let d = check_training_inputs(x, y)?;
    params.validate(d)?;
    if n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be ≥ 1".into()));
    }
    let n = x.len();
    let trees: Vec<RegressionTree> = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let fit_seed = derive_seed(seed, &[stream::TREE, i as u64, 1]);
            if bootstrap {
                let mut rng = rng_from(derive_seed(seed, &[stream::TREE, i as u64, 0]));
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let xb: Vec<Vec<f64>> = rows.iter().map(|&r| x[r].clone()).collect();
                let yb: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
                fit_regression_tree(&xb, &yb, None, params, fit_seed)
            } else {
                fit_regression_tree(x, y, None, params, fit_seed)
            }
        })
        .collect::<Result<_>>()?;
    Ok(RandomForest { trees, n_trees, bootstrap, seed })
}

/// Mean of the member tree predictions.
pub fn predict_forest(forest: &RandomForest, x: &[f64]) -> Result<f64> {
    forest.predict(x)
}

/// Mean decrease in impurity: total split gain per feature across all
/// trees, normalized to sum to 1. A forest with no splits at all gets the
/// uniform score with `no_splits` set.
pub fn feature_importance(forest: &RandomForest) -> FeatureImportance {
    let d = forest.n_features();
    let mut totals = vec![0.0; d];
    for tree in &forest.trees {
        for node in &tree.nodes {
            if let TreeNode::Split { feature, gain, .. } = node {
                totals[*feature] += gain;
            }
        }
    }
    let total: f64 = totals.iter().sum();
    if total <= 0.0 {
        return FeatureImportance { scores: vec![1.0 / d as f64; d], no_splits: true };
    }
    for score in &mut totals {
        *score /= total;
    }
    FeatureImportance { scores: totals, no_splits: false }
}
