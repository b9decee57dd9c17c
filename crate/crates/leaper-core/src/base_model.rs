//! Source-environment predictor: feature assembly, min-max normalization,
//! importance-based feature selection, cross-validated hyperparameter
//! search, and the final forest + boosting ensemble.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ApplicationProfile, Configuration, ConfigurationSpace, Dataset, Metric};
use crate::error::{Error, Result};
use crate::learners::{
    feature_importance, fit_gradient_boosting, fit_random_forest, GradientBoostedModel,
    RandomForest, TreeParams,
};
use crate::relatedness::{mre, pair_up};
use crate::rng::{derive_seed, rng_from, stream};

/// Per-feature (min, max) bounds learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    bounds: Vec<(f64, f64)>,
}

impl Normalizer {
    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
}

/// Indices kept after importance ranking, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub selected_indices: Vec<usize>,
    /// The requested number of features (the kept count is
    /// `min(k, dimension)`).
    pub k: usize,
    /// True when the probe forest found no usable signal and the selection
    /// fell back to the first `min(k, d)` indices.
    pub no_signal: bool,
}

impl FeatureSelection {
    /// Projects a full feature vector onto the selected coordinates.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.selected_indices.iter().map(|&i| x[i]).collect()
    }
}

/// One random-forest configuration to try during CV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestCandidate {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

/// One gradient-boosting configuration to try during CV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostCandidate {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

/// Candidate settings searched by [`train_base_model`]; the forest and the
/// boosting model are tuned independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub forest: Vec<ForestCandidate>,
    pub gbm: Vec<BoostCandidate>,
}

impl HyperGrid {
    /// Default search grid for `dimension` selected features: forests with
    /// n_trees ∈ {100, 300} × max_features ∈ {⌈d/3⌉, ⌈√d⌉} (deduplicated),
    /// boosting with stages ∈ {100, 300} × learning rate ∈ {0.05, 0.1} ×
    /// depth ∈ {2, 3}.
    pub fn default_for(dimension: usize) -> HyperGrid {
        let d = dimension.max(1);
        let mut feature_counts = vec![d.div_ceil(3), (d as f64).sqrt().ceil() as usize];
        feature_counts.dedup();
        let mut forest = Vec::new();
        for &n_trees in &[100, 300] {
            for &m in &feature_counts {
                forest.push(ForestCandidate {
                    n_trees,
                    tree: TreeParams {
                        max_features: Some(m.clamp(1, d)),
                        ..Default::default()
                    },
                    bootstrap: true,
                });
            }
        }
        let mut gbm = Vec::new();
        for &n_stages in &[100, 300] {
            for &learning_rate in &[0.05, 0.1] {
                for &depth in &[2, 3] {
                    gbm.push(BoostCandidate {
                        n_stages,
                        learning_rate,
                        tree: TreeParams { max_depth: Some(depth), ..Default::default() },
                    });
                }
            }
        }
        HyperGrid { forest, gbm }
    }

    fn validate(&self) -> Result<()> {
        if self.forest.is_empty() || self.gbm.is_empty() {
            return Err(Error::InvalidParameter(
                "hyperparameter grid needs at least one forest and one boosting \
                 candidate"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The fixed rule combining the two ensemble members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    Mean,
}

/// CV scores of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCandidateReport {
    pub label: String,
    pub fold_mres: Vec<f64>,
    pub mean_mre: f64,
}

/// Everything the hyperparameter search measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub forest: Vec<CvCandidateReport>,
    pub gbm: Vec<CvCandidateReport>,
    pub chosen_forest: usize,
    pub chosen_gbm: usize,
}

/// Trained source-environment predictor for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub env_id: String,
    pub target_metric: Metric,
    /// Training profile schema; prediction inputs must match it.
    pub profile_names: Vec<String>,
    pub space: ConfigurationSpace,
    pub normalizer: Normalizer,
    pub selection: FeatureSelection,
    pub forest: RandomForest,
    pub gbm: GradientBoostedModel,
    pub combiner: Combiner,
    pub cv_report: CvReport,
}

/// Fits on a training matrix/targets and predicts a held-out matrix.
type FitPredict<'a> = &'a dyn Fn(&[Vec<f64>], &[f64], &[Vec<f64>]) -> Result<Vec<f64>>;

/// Trains on the non-`fold` rows, predicts the `fold` rows, returns their
/// mean relative error.
fn cv_fold_mre(
    x: &[Vec<f64>],
    y: &[f64],
    fold_of_row: &[usize],
    fold: usize,
    fit_predict: FitPredict<'_>,
) -> Result<f64> {
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut held_x = Vec::new();
    let mut held_y = Vec::new();
    for row in 0..x.len() {
        if fold_of_row[row] == fold {
            held_x.push(x[row].clone());
            held_y.push(y[row]);
        } else {
            train_x.push(x[row].clone());
            train_y.push(y[row]);
        }
    }
    let predictions = fit_predict(&train_x, &train_y, &held_x)?;
    mre(&pair_up(&predictions, &held_y)?)
}

/// `[profile values ‖ encoded configuration]`, the model input layout.
pub fn assemble_features(
    profile: &ApplicationProfile,
    config: &Configuration,
    space: &ConfigurationSpace,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(profile.len() + space.encoded_len());
    out.extend_from_slice(profile.values());
    out.extend(space.encode(config)?);
    Ok(out)
}

/// Learns per-feature min/max bounds.
pub fn fit_normalizer(x: &[Vec<f64>]) -> Result<Normalizer> {
    if x.is_empty() {
        return Err(Error::EmptyInput("normalizer training matrix"));
    }
    let d = x[0].len();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); d];
    for (row, features) in x.iter().enumerate() {
        if features.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: features.len() });
        }
        for (column, &v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, place: format!("column {column}") });
            }
            bounds[column].0 = bounds[column].0.min(v);
            bounds[column].1 = bounds[column].1.max(v);
        }
    }
    Ok(Normalizer { bounds })
}

/// Min-max scales into [0,1], clamping out-of-range values; constant
/// training columns map to 0.
pub fn apply_normalizer(norm: &Normalizer, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != norm.bounds.len() {
        return Err(Error::DimensionMismatch {
            expected: norm.bounds.len(),
            actual: x.len(),
        });
    }
    Ok(x.iter()
        .zip(&norm.bounds)
        .map(|(&v, &(lo, hi))| {
            if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect())
}

/// Ranks features with a probe forest and keeps the top `k`, ties broken
/// toward the lower index; the kept indices are reported ascending. Expects
/// already-normalized inputs.
pub fn select_features(
    x: &[Vec<f64>],
    y: &[f64],
    k: usize,
    seed: u64,
) -> Result<FeatureSelection> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be ≥ 1".into()));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("feature selection matrix"));
    }
    let d = x[0].len();
    if d <= k {
        return Ok(FeatureSelection {
            selected_indices: (0..d).collect(),
            k,
            no_signal: false,
        });
    }

    let probe_params = TreeParams {
        max_features: Some(d.div_ceil(3).max(1)),
        ..Default::default()
    };
    let probe = fit_random_forest(
        x,
        y,
        &probe_params,
        100,
        true,
        derive_seed(seed, &[stream::FEATURE_PROBE]),
    )?;
    let importance = feature_importance(&probe);
    if importance.no_splits {
        return Ok(FeatureSelection {
            selected_indices: (0..k).collect(),
            k,
            no_signal: true,
        });
    }
    let mut ranked: Vec<usize> = (0..d).collect();
    ranked.sort_by(|&a, &b| {
        importance.scores[b]
            .partial_cmp(&importance.scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = ranked[..k].to_vec();
    selected.sort_unstable();
    Ok(FeatureSelection { selected_indices: selected, k, no_signal: false })
}

/// Trains the ensemble for `target_metric` with a k-fold CV grid search.
///
/// Pipeline: assemble → normalize → select features → per candidate, k-fold
/// CV scored by mean relative error → refit the two winners on all rows.
/// Fold membership comes from a seeded shuffle split into contiguous
/// chunks; every fit derives its seed from (seed, candidate, fold), so the
/// search is deterministic under any parallel schedule.
pub fn train_base_model(
    dataset: &Dataset,
    target_metric: Metric,
    grid: &HyperGrid,
    folds: usize,
    k_features: usize,
    seed: u64,
) -> Result<BaseModel> {
    grid.validate()?;
    let y = dataset.require_metric(target_metric)?;
    let n = dataset.samples.len();
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("folds must be ≥ 2, got {folds}")));
    }
    if folds > n {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds exceed the {n} available samples"
        )));
    }
    let profile_names =
        dataset.profile_names().expect("n ≥ folds ≥ 2 rows exist").to_vec();
    for (index, sample) in dataset.samples.iter().enumerate() {
        if sample.profile.names() != profile_names.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "sample {index} has a different profile schema than sample 0"
            )));
        }
    }

    let raw: Vec<Vec<f64>> = dataset
        .samples
        .iter()
        .map(|s| assemble_features(&s.profile, &s.configuration, &dataset.space))
        .collect::<Result<_>>()?;
    let normalizer = fit_normalizer(&raw)?;
    let normalized: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| apply_normalizer(&normalizer, row))
        .collect::<Result<_>>()?;
    let selection = select_features(&normalized, &y, k_features, seed)?;
    let x: Vec<Vec<f64>> = normalized.iter().map(|row| selection.project(row)).collect();

    // Seeded shuffle, then contiguous chunks with balanced boundaries.
    let mut order: Vec<usize> = (0..n).collect();
    {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng_from(derive_seed(seed, &[stream::CV_SHUFFLE])));
    }
    let fold_of_row = {
        let mut assignment = vec![0usize; n];
        for f in 0..folds {
            for &row in &order[f * n / folds..(f + 1) * n / folds] {
                assignment[row] = f;
            }
        }
        assignment
    };

    let forest_reports: Vec<CvCandidateReport> = grid
        .forest
        .par_iter()
        .enumerate()
        .map(|(c, cand)| {
            let fold_mres: Vec<f64> = (0..folds)
                .into_par_iter()
                .map(|fold| {
                    cv_fold_mre(&x, &y, &fold_of_row, fold, &|tx, ty, hx| {
                        let model = fit_random_forest(
                            tx,
                            ty,
                            &cand.tree,
                            cand.n_trees,
                            cand.bootstrap,
                            derive_seed(seed, &[stream::FOREST_EVAL, c as u64, fold as u64]),
                        )?;
                        hx.iter().map(|row| model.predict(row)).collect()
                    })
                })
                .collect::<Result<_>>()?;
            let mean_mre = fold_mres.iter().sum::<f64>() / folds as f64;
            Ok(CvCandidateReport {
                label: format!(
                    "forest n_trees={} max_features={:?} bootstrap={}",
                    cand.n_trees, cand.tree.max_features, cand.bootstrap
                ),
                fold_mres,
                mean_mre,
            })
        })
        .collect::<Result<_>>()?;

    let gbm_reports: Vec<CvCandidateReport> = grid
        .gbm
        .par_iter()
        .enumerate()
        .map(|(c, cand)| {
            let fold_mres: Vec<f64> = (0..folds)
                .into_par_iter()
                .map(|fold| {
                    cv_fold_mre(&x, &y, &fold_of_row, fold, &|tx, ty, hx| {
                        let model = fit_gradient_boosting(
                            tx,
                            ty,
                            &cand.tree,
                            cand.n_stages,
                            cand.learning_rate,
                            derive_seed(seed, &[stream::BOOST_EVAL, c as u64, fold as u64]),
                        )?;
                        hx.iter().map(|row| model.predict(row)).collect()
                    })
                })
                .collect::<Result<_>>()?;
            let mean_mre = fold_mres.iter().sum::<f64>() / folds as f64;
            Ok(CvCandidateReport {
                label: format!(
                    "gbm n_stages={} learning_rate={} max_depth={:?}",
                    cand.n_stages, cand.learning_rate, cand.tree.max_depth
                ),
                fold_mres,
                mean_mre,
            })
        })
        .collect::<Result<_>>()?;

    let argmin = |reports: &[CvCandidateReport]| {
        let mut best = 0;
        for (i, r) in reports.iter().enumerate().skip(1) {
            if r.mean_mre < reports[best].mean_mre {
                best = i;
            }
        }
        best
    };
    let chosen_forest = argmin(&forest_reports);
    let chosen_gbm = argmin(&gbm_reports);

    let fc = &grid.forest[chosen_forest];
    let forest = fit_random_forest(
        &x,
        &y,
        &fc.tree,
        fc.n_trees,
        fc.bootstrap,
        derive_seed(seed, &[stream::FOREST_EVAL, chosen_forest as u64, u64::MAX]),
    )?;
    let gc = &grid.gbm[chosen_gbm];
    let gbm = fit_gradient_boosting(
        &x,
        &y,
        &gc.tree,
        gc.n_stages,
        gc.learning_rate,
        derive_seed(seed, &[stream::BOOST_EVAL, chosen_gbm as u64, u64::MAX]),
    )?;

    Ok(BaseModel {
        env_id: dataset.env_id.clone(),
        target_metric,
        profile_names,
        space: dataset.space.clone(),
        normalizer,
        selection,
        forest,
        gbm,
        combiner: Combiner::Mean,
        cv_report: CvReport {
            folds,
            forest: forest_reports,
            gbm: gbm_reports,
            chosen_forest,
            chosen_gbm,
        },
    })
}

impl BaseModel {
    /// Normalized, selected model input for (profile, config).
    pub fn model_input(
        &self,
        profile: &ApplicationProfile,
        config: &Configuration,
    ) -> Result<Vec<f64>> {
        if profile.names() != self.profile_names.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "profile features {:?} do not match the training schema {:?}",
                profile.names(),
                self.profile_names
            )));
        }
        let raw = assemble_features(profile, config, &self.space)?;
        let normalized = apply_normalizer(&self.normalizer, &raw)?;
        Ok(self.selection.project(&normalized))
    }

    /// Ensemble prediction on an already normalized-and-selected input.
    pub(crate) fn predict_prepared(&self, x: &[f64]) -> Result<f64> {
        let raw = match self.combiner {
            Combiner::Mean => (self.forest.predict(x)? + self.gbm.predict(x)?) / 2.0,
        };
        Ok(clamp_for_metric(self.target_metric, raw))
    }
}

/// Clamps a raw model output into the metric's physical range: resource
/// fractions into [0,1], execution time to strictly positive.
pub(crate) fn clamp_for_metric(metric: Metric, raw: f64) -> f64 {
    if metric.is_fraction() {
        raw.clamp(0.0, 1.0)
    } else {
        raw.max(1e-9)
    }
}

/// Ensemble prediction: mean of forest and boosting outputs, clamped into
/// [0,1] for resource fractions and to > 0 for execution time.
pub fn predict_base(
    model: &BaseModel,
    profile: &ApplicationProfile,
    config: &Configuration,
) -> Result<f64> {
    let x = model.model_input(profile, config)?;
    model.predict_prepared(&x)
}
