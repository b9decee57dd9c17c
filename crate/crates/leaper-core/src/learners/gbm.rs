//! Gradient-boosted regression trees with squared-error loss, so each stage
//! fits the residuals of the running prediction.

use serde::{Deserialize, Serialize};

use super::tree::{fit_regression_tree, RegressionTree};
use super::{check_training_inputs, TreeParams};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: RegressionTree,
    pub learning_rate: f64,
}

/// prediction(x) = init_value + Σ stage.learning_rate × stage.tree(x)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedModel {
    pub init_value: f64,
    pub stages: Vec<BoostStage>,
    pub n_features: usize,
}

impl GradientBoostedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.stages.iter().fold(self.init_value, |acc, stage| {
            acc + stage.learning_rate * stage.tree.predict_unchecked(x)
        })
    }
}

/// Fits `n_stages` trees to successive residuals starting from the target
/// mean. `learning_rate` must lie in (0, 1]; training MSE is then
/// non-increasing in the stage count.
pub fn fit_gradient_boosting(
    x: &[Vec<f64>],
    y: &[f64],
    tree_params: &TreeParams,
    n_stages: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<GradientBoostedModel> {
    let d = check_training_inputs(x, y)?;
    tree_params.validate(d)?;
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "learning_rate must be in (0, 1], got {learning_rate}"
        )));
    }

    let init_value = y.iter().sum::<f64>() / y.len() as f64;
    let mut current: Vec<f64> = vec![init_value; y.len()];
    let mut stages = Vec::with_capacity(n_stages);
    for t in 0..n_stages {
        let residuals: Vec<f64> =
            y.iter().zip(&current).map(|(yi, ci)| yi - ci).collect();
        let stage_seed = derive_seed(seed, &[stream::BOOST_STAGE, t as u64]);
        let tree = fit_regression_tree(x, &residuals, None, tree_params, stage_seed)?;
        for (ci, row) in current.iter_mut().zip(x) {
            *ci += learning_rate * tree.predict_unchecked(row);
        }
        stages.push(BoostStage { tree, learning_rate });
    }
    Ok(GradientBoostedModel { init_value, stages, n_features: d })
}

pub fn predict_gbm(model: &GradientBoostedModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}
