//! Two-population instance-transfer boosting for regression.
//!
//! Source rows carry knowledge from the cheap environment, target rows the
//! few labeled shots. Each round fits a weak tree on the weighted union;
//! target rows that the tree misses are boosted up (AdaBoost style) while
//! source rows that disagree with the target evidence decay under a fixed
//! down-weighting factor, so unhelpful source instances fade out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{fit_regression_tree, RegressionTree, SampleWeightVector, TreeParams};
use crate::rng::{derive_seed, stream};

use super::AugmentedRow;

/// Floor for the per-round model weight factor; keeps `ln(1/beta)` finite
/// when a round's target-weighted error is exactly zero.
const BETA_FLOOR: f64 = 1e-12;

/// Stand-in `beta` recorded when the very first round already has
/// target-weighted error >= 0.5; just below 1 so its median weight stays
/// positive while contributing essentially nothing relative to any
/// well-performing round.
const BETA_NEAR_ONE: f64 = 1.0 - 1e-9;

/// One recorded boosting round: the weak learner and its weight factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub tree: RegressionTree,
    /// Round weight factor `beta_t`; the round's vote in the weighted
    /// median is `ln(1/beta_t)`.
    pub beta: f64,
}

/// Boosted instance-transfer model over source ∪ target rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrAdaBoostModel {
    /// Recorded rounds in training order; prediction takes the weighted
    /// median over the last `ceil(len/2)` of them.
    pub rounds: Vec<BoostRound>,
    pub n_features: usize,
    /// Number of source rows that led the combined weight vector.
    pub n_source: usize,
    /// Normalized instance weights after the last completed update
    /// (source rows first, then target rows).
    pub final_weights: Vec<f64>,
    /// Set when a round reproduced every label exactly (zero maximum
    /// error); that round dominates the median and boosting stopped.
    pub perfect_fit: bool,
    /// Set when all target labels were identical: the model degenerates to
    /// this constant and no rounds are trained.
    pub constant_value: Option<f64>,
}

impl TrAdaBoostModel {
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
        if let Some(c) = self.constant_value {
            return c;
        }
        let take = self.rounds.len().div_ceil(2);
        let tail = &self.rounds[self.rounds.len() - take..];
        let mut votes: Vec<(f64, f64)> = tail
            .iter()
            .map(|round| (round.tree.predict_unchecked(x), (1.0 / round.beta).ln()))
            .collect();
        votes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let half: f64 = votes.iter().map(|&(_, w)| w).sum::<f64>() / 2.0;
        let mut cumulative = 0.0;
        for &(prediction, weight) in &votes {
            cumulative += weight;
            if cumulative >= half {
                return prediction;
            }
        }
        votes[votes.len() - 1].0
    }
}

/// Prediction of a boosted transfer model: weighted median over the later
/// half of the recorded rounds with `ln(1/beta_t)` round weights.
pub fn predict_tradaboost(model: &TrAdaBoostModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// Fits the instance-transfer booster.
///
/// Per round: fit a weak tree on the weighted source ∪ target rows, scale
/// absolute errors by their maximum into adjusted errors `e_i ∈ [0,1]`,
/// measure the round by the weight mass it loses on target rows
/// (`eps_t = Σ_{target} w_i e_i` with weights normalized over all rows),
/// multiply target weights by `beta_t^(-e_i)` with `beta_t = eps/(1-eps)`
/// and source weights by `beta_src^(e_i)` with
/// `beta_src = 1/(1+sqrt(2 ln n_src / rounds))`, then renormalize.
/// Stops early on a perfect round (max error 0) or once `eps_t >= 0.5`;
/// rounds at or past that error are not recorded, except that a failing
/// first round is kept (with `beta` just below 1) so the model is never
/// empty.
pub fn fit_tradaboost(
    source_rows: &[AugmentedRow],
    target_rows: &[AugmentedRow],
    rounds: usize,
    weak_params: &TreeParams,
    seed: u64,
) -> Result<TrAdaBoostModel> {
    if rounds < 1 {
        return Err(Error::InvalidParameter(format!(
            "boosting rounds must be >= 1, got {rounds}"
        )));
    }
    if target_rows.is_empty() {
        return Err(Error::EmptyInput("tradaboost target rows"));
    }
    let n_features = target_rows[0].input.len();
    for row in source_rows.iter().chain(target_rows) {
        if row.input.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                actual: row.input.len(),
            });
        }
    }
    let n_source = source_rows.len();
    let n = n_source + target_rows.len();

    let first_label = target_rows[0].label;
    if target_rows.iter().all(|r| r.label == first_label) {
        return Ok(TrAdaBoostModel {
            rounds: Vec::new(),
            n_features,
            n_source,
            final_weights: vec![1.0 / n as f64; n],
            perfect_fit: false,
            constant_value: Some(first_label),
        });
    }

    let x: Vec<Vec<f64>> = source_rows
        .iter()
        .chain(target_rows)
        .map(|r| r.input.clone())
        .collect();
    let y: Vec<f64> = source_rows
        .iter()
        .chain(target_rows)
        .map(|r| r.label)
        .collect();

    let beta_src = if n_source == 0 {
        1.0
    } else {
        1.0 / (1.0 + (2.0 * (n_source as f64).ln() / rounds as f64).sqrt())
    };

    let mut weights = vec![1.0 / n as f64; n];
    let mut recorded: Vec<BoostRound> = Vec::new();
    let mut perfect_fit = false;

    for t in 0..rounds {
        let weight_vec = SampleWeightVector::new(weights.clone())?;
        let tree = fit_regression_tree(
            &x,
            &y,
            Some(&weight_vec),
            weak_params,
            derive_seed(seed, &[stream::TRADABOOST, t as u64]),
        )?;

        let errors: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(xi, &yi)| (tree.predict_unchecked(xi) - yi).abs())
            .collect();
        let max_err = errors.iter().copied().fold(0.0_f64, f64::max);
        if max_err <= 0.0 {
            recorded.push(BoostRound { tree, beta: BETA_FLOOR });
            perfect_fit = true;
            break;
        }

        let adjusted: Vec<f64> = errors.iter().map(|&e| e / max_err).collect();
        let eps: f64 = (n_source..n).map(|i| weights[i] * adjusted[i]).sum();
        if eps >= 0.5 {
            if recorded.is_empty() {
                recorded.push(BoostRound { tree, beta: BETA_NEAR_ONE });
            }
            break;
        }
        let beta = (eps / (1.0 - eps)).max(BETA_FLOOR);
        recorded.push(BoostRound { tree, beta });

        for (i, w) in weights.iter_mut().enumerate() {
            if i < n_source {
                *w *= beta_src.powf(adjusted[i]);
            } else {
                *w *= beta.powf(-adjusted[i]);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }

    Ok(TrAdaBoostModel {
        rounds: recorded,
        n_features,
        n_source,
        final_weights: weights,
        perfect_fit,
        constant_value: None,
    })
}
