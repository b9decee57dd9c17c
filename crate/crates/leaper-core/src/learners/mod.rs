//! From-scratch regression learners: CART tree, bagged random forest, and
//! gradient-boosted trees.
//!
//! These are the building blocks of the base-environment predictor and the
//! weak learner inside the transfer booster. Fitting is deterministic for a
//! fixed seed regardless of thread count: every randomized sub-task draws
//! from its own derived stream.

mod forest;
mod gbm;
mod tree;

pub use forest::{
    feature_importance, fit_random_forest, predict_forest, FeatureImportance,
    RandomForest,
};
pub use gbm::{fit_gradient_boosting, predict_gbm, BoostStage, GradientBoostedModel};
pub use tree::{fit_regression_tree, predict_tree, RegressionTree, TreeNode};

pub(crate) use tree::split_threshold;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural limits applied while growing a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum tree depth; `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    /// Minimum number of rows each child of a split must keep.
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` considers all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_leaf: 1, max_features: None }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self, dimension: usize) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be ≥ 1".into()));
        }
        if let Some(m) = self.max_features {
            if m < 1 || m > dimension {
                return Err(Error::InvalidParameter(format!(
                    "max_features {m} outside [1, {dimension}]"
                )));
            }
        }
        Ok(())
    }
}

/// Per-row training weights: non-negative, at least one positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeightVector(Vec<f64>);

impl SampleWeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput("sample weights"));
        }
        for (row, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { row, place: "weight".into() });
            }
            if w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative weight {w} at row {row}"
                )));
            }
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidParameter(
                "at least one sample weight must be positive".into(),
            ));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Tolerance under which two candidate split SSEs count as tied, so the
/// deterministic tie-break (lowest feature, then lowest threshold) decides
/// instead of summation rounding noise. `scale` is the node's total weighted
/// sum of squared targets; the tolerance sits far above accumulation error
/// (~1e-16 relative) and far below any meaningful SSE difference.
pub(crate) fn split_tie_tolerance(scale: f64) -> f64 {
    1e-9 * scale.max(1.0)
}

/// Index of the first value within `tolerance` of the minimum. The caller
/// provides values already ordered by the tie-break rule.
pub(crate) fn fuzzy_argmin(values: &[f64], tolerance: f64) -> Option<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= min + tolerance)
}

/// Validates a training matrix and target vector; returns the feature
/// dimension.
pub(crate) fn check_training_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyInput("training matrix"));
    }
    let d = x[0].len();
    for (row, features) in x.iter().enumerate() {
        if features.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: features.len() });
        }
        for (column, &v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, place: format!("column {column}") });
            }
        }
    }
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    for (row, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, place: "target".into() });
        }
    }
    Ok(d)
}
