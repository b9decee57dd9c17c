//! Few-shot adaptation of a trained base model to a new environment.
//!
//! A handful of labeled target samples ("shots") plus the source design
//! points are projected into the base model's input space and augmented with
//! the base prediction as an extra coordinate, so a transfer learner can
//! realize anything from a pure output transform to a feature-aware
//! correction. Two learners are trained — boosted instance transfer
//! ([`fit_tradaboost`]) and a Gaussian process ([`fit_gp`]) — over up to M
//! seeded iterations, and the candidate with the lowest selection error
//! becomes the target predictor. Selecting by error on target evidence is
//! also the guard against negative transfer: a learner that the source data
//! misleads scores worse and is discarded.

mod gp;
mod tradaboost;

pub use gp::{fit_gp, gp_posterior, GaussianProcessModel, GpKernelParams};
pub use tradaboost::{fit_tradaboost, predict_tradaboost, BoostRound, TrAdaBoostModel};

use serde::{Deserialize, Serialize};

use crate::base_model::{clamp_for_metric, BaseModel};
use crate::domain::{ApplicationProfile, Configuration, Dataset, Metric, Sample};
use crate::error::{Error, Result};
use crate::learners::TreeParams;
use crate::relatedness::{mre, PredictionPair};
use crate::rng::{derive_seed, stream};

/// Labeled samples measured on the target environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSet {
    pub env_id: String,
    pub samples: Vec<Sample>,
}

impl FewShotSet {
    pub fn new(env_id: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("few-shot set"));
        }
        Ok(Self { env_id: env_id.into(), samples })
    }
}

/// One training row for a transfer learner: the base model's prepared input
/// with the base prediction appended, labeled with the target response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedRow {
    pub input: Vec<f64>,
    pub label: f64,
}

/// How transfer-learner candidates are scored.
#[derive(Debug, Clone)]
pub enum SelectionMode {
    /// Leave-one-out mean relative error over the shots (no extra labels
    /// needed). With a single shot this degrades to training error and the
    /// report carries a warning flag.
    LoocvOnShots,
    /// Mean relative error over an independently labeled validation set.
    Holdout(Dataset),
}

/// Knobs for [`transfer`].
#[derive(Debug, Clone)]
pub struct TransferOptions {
    /// Number of seeded candidate-training iterations M (>= 1).
    pub max_iterations: usize,
    pub selection_mode: SelectionMode,
    pub seed: u64,
    /// Boosting rounds for the instance-transfer learner.
    pub boost_rounds: usize,
    /// Weak-learner shape for the boosted candidate; shallow trees keep the
    /// per-round fits weak so the instance reweighting can steer them.
    pub boost_tree: TreeParams,
    pub gp: GpKernelParams,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            selection_mode: SelectionMode::LoocvOnShots,
            seed: 0,
            boost_rounds: 20,
            boost_tree: TreeParams { max_depth: Some(3), ..Default::default() },
            gp: GpKernelParams::default(),
        }
    }
}

impl TransferOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(format!(
                "max_iterations must be >= 1, got {}",
                self.max_iterations
            )));
        }
        if self.boost_rounds < 1 {
            return Err(Error::InvalidParameter(format!(
                "boost_rounds must be >= 1, got {}",
                self.boost_rounds
            )));
        }
        self.gp.validate()
    }
}

/// Which transfer learner a candidate is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TlKind {
    Boost,
    Gp,
}

/// Score of one trained (iteration, learner) candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCandidate {
    pub iteration: usize,
    pub kind: TlKind,
    pub score: f64,
}

/// All candidate scores plus which one the transfer kept. Candidates appear
/// in evaluation order (iteration ascending, boosting before the GP), and
/// ties keep the earliest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub mode: String,
    pub candidates: Vec<SelectionCandidate>,
    pub chosen: usize,
    /// Set when leave-one-out scoring was impossible (single shot) and the
    /// scores are training errors instead.
    pub training_error_fallback: bool,
}

/// The winning transfer learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransferLearner {
    Boost(TrAdaBoostModel),
    Gp(GaussianProcessModel),
}

impl TransferLearner {
    fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        match self {
            TransferLearner::Boost(m) => m.predict(x),
            TransferLearner::Gp(g) => Ok(g.posterior(x)?.0),
        }
    }
}

/// Target-environment predictor: the source base model plus the selected
/// transfer learner over its augmented input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    pub base: BaseModel,
    pub target_env_id: String,
    pub chosen_tl: TransferLearner,
    pub selection_report: SelectionReport,
    pub few_shot_size: usize,
}

/// Projects samples into the base model's input space and appends the base
/// prediction; labels come from the sample's response for the base metric.
pub fn augment(base: &BaseModel, samples: &[Sample]) -> Result<Vec<AugmentedRow>> {
    let missing: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.responses.contains_key(&base.target_metric))
        .map(|(i, _)| i)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MetricAbsent { metric: base.target_metric, indices: missing });
    }
    samples
        .iter()
        .map(|s| {
            let mut input = base.model_input(&s.profile, &s.configuration)?;
            let prediction = base.predict_prepared(&input)?;
            input.push(prediction);
            Ok(AugmentedRow { input, label: s.responses[&base.target_metric] })
        })
        .collect()
}

/// MRE of a (clamped) predictor over augmented rows.
fn score_rows(predict: impl Fn(&[f64]) -> f64, rows: &[AugmentedRow]) -> Result<f64> {
    let pairs: Vec<PredictionPair> = rows
        .iter()
        .map(|r| PredictionPair { predicted: predict(&r.input), actual: r.label })
        .collect();
    mre(&pairs)
}

/// Adapts `base` to the target environment described by `shots`.
///
/// For each of up to M iterations (seeded independently), both transfer
/// learners are trained — the booster on source rows plus shots, the GP on
/// the shots — and scored per `options.selection_mode`. The lowest-scoring
/// (iteration, learner) pair wins; ties keep the earliest candidate, with
/// the booster ordered before the GP inside an iteration.
pub fn transfer(
    base: &BaseModel,
    shots: &FewShotSet,
    source_doe: &Dataset,
    options: &TransferOptions,
) -> Result<TransferModel> {
    options.validate()?;
    if shots.samples.is_empty() {
        return Err(Error::EmptyInput("few-shot set"));
    }
    let target_rows = augment(base, &shots.samples)?;
    let source_rows = augment(base, &source_doe.samples)?;
    let holdout_rows = match &options.selection_mode {
        SelectionMode::Holdout(validation) => {
            if validation.samples.is_empty() {
                return Err(Error::InvalidParameter(
                    "holdout validation set is empty".into(),
                ));
            }
            Some(augment(base, &validation.samples)?)
        }
        SelectionMode::LoocvOnShots => None,
    };
    let metric = base.target_metric;
    let fallback = holdout_rows.is_none() && target_rows.len() == 1;

    let mut candidates = Vec::with_capacity(2 * options.max_iterations);
    let mut learners = Vec::with_capacity(2 * options.max_iterations);
    for iteration in 0..options.max_iterations {
        let iter_seed = derive_seed(options.seed, &[stream::TRANSFER_ITER, iteration as u64]);
        let boost = fit_tradaboost(
            &source_rows,
            &target_rows,
            options.boost_rounds,
            &options.boost_tree,
            iter_seed,
        )?;
        let gp = fit_gp(&target_rows, options.gp)?;

        let boost_score = match &holdout_rows {
            Some(rows) => {
                score_rows(|x| clamp_for_metric(metric, boost.predict_unchecked(x)), rows)?
            }
            None if fallback => score_rows(
                |x| clamp_for_metric(metric, boost.predict_unchecked(x)),
                &target_rows,
            )?,
            None => loocv_boost(&source_rows, &target_rows, options, iter_seed, metric)?,
        };
        let gp_score = match &holdout_rows {
            Some(rows) => {
                score_rows(|x| clamp_for_metric(metric, gp.posterior_unchecked(x).0), rows)?
            }
            None if fallback => score_rows(
                |x| clamp_for_metric(metric, gp.posterior_unchecked(x).0),
                &target_rows,
            )?,
            None => loocv_gp(&target_rows, options.gp, metric)?,
        };

        candidates.push(SelectionCandidate { iteration, kind: TlKind::Boost, score: boost_score });
        learners.push(TransferLearner::Boost(boost));
        candidates.push(SelectionCandidate { iteration, kind: TlKind::Gp, score: gp_score });
        learners.push(TransferLearner::Gp(gp));
    }

    let mut chosen = 0;
    for (i, candidate) in candidates.iter().enumerate() {
        if candidate.score < candidates[chosen].score {
            chosen = i;
        }
    }
    let chosen_tl = learners.into_iter().nth(chosen).expect("chosen index in range");

    Ok(TransferModel {
        base: base.clone(),
        target_env_id: shots.env_id.clone(),
        chosen_tl,
        selection_report: SelectionReport {
            mode: match options.selection_mode {
                SelectionMode::LoocvOnShots => "loocv-on-shots".into(),
                SelectionMode::Holdout(_) => "holdout".into(),
            },
            candidates,
            chosen,
            training_error_fallback: fallback,
        },
        few_shot_size: shots.samples.len(),
    })
}

/// Leave-one-out MRE of the boosted learner: each fold refits on the source
/// rows plus the remaining shots with the iteration's seed.
fn loocv_boost(
    source_rows: &[AugmentedRow],
    target_rows: &[AugmentedRow],
    options: &TransferOptions,
    seed: u64,
    metric: Metric,
) -> Result<f64> {
    let mut pairs = Vec::with_capacity(target_rows.len());
    for i in 0..target_rows.len() {
        let subset: Vec<AugmentedRow> = target_rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.clone())
            .collect();
        let model = fit_tradaboost(
            source_rows,
            &subset,
            options.boost_rounds,
            &options.boost_tree,
            seed,
        )?;
        pairs.push(PredictionPair {
            predicted: clamp_for_metric(metric, model.predict_unchecked(&target_rows[i].input)),
            actual: target_rows[i].label,
        });
    }
    mre(&pairs)
}

/// Leave-one-out MRE of the GP learner over the shots.
fn loocv_gp(target_rows: &[AugmentedRow], kernel: GpKernelParams, metric: Metric) -> Result<f64> {
    let mut pairs = Vec::with_capacity(target_rows.len());
    for i in 0..target_rows.len() {
        let subset: Vec<AugmentedRow> = target_rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, r)| r.clone())
            .collect();
        let gp = fit_gp(&subset, kernel)?;
        let (mean, _) = gp.posterior(&target_rows[i].input)?;
        pairs.push(PredictionPair {
            predicted: clamp_for_metric(metric, mean),
            actual: target_rows[i].label,
        });
    }
    mre(&pairs)
}

/// Predicts the target response for one configuration: augment the input
/// through the base model, evaluate the chosen transfer learner, clamp into
/// the metric's physical range.
pub fn predict_target(
    tm: &TransferModel,
    profile: &ApplicationProfile,
    config: &Configuration,
) -> Result<f64> {
    let mut input = tm.base.model_input(profile, config)?;
    let prediction = tm.base.predict_prepared(&input)?;
    input.push(prediction);
    let raw = tm.chosen_tl.predict_raw(&input)?;
    Ok(clamp_for_metric(tm.base.target_metric, raw))
}
