//! Few-shot transfer learning for accelerator performance and resource
//! models.
//!
//! The crate trains ensemble regression models that map an application
//! profile plus a configuration of design-space options to execution time or
//! resource usage, then adapts a trained base model to a new environment from
//! a handful of labeled samples. Synthetic environments with controllable
//! relatedness stand in for slow hardware runs, so the whole pipeline is
//! exercisable on a desk machine.
//!
//! Everything randomized takes an explicit seed and is deterministic for a
//! fixed seed, including under `rayon` parallelism.

pub mod base_model;
pub mod doe;
pub mod domain;
pub mod error;
pub mod learners;
pub mod relatedness;
mod rng;
pub mod store;
pub mod synth;
pub mod transfer;

pub use base_model::{
    apply_normalizer, assemble_features, fit_normalizer, predict_base, select_features,
    train_base_model, BaseModel, BoostCandidate, Combiner, CvCandidateReport, CvReport,
    FeatureSelection, ForestCandidate, HyperGrid, Normalizer,
};
pub use doe::{lhs_sample, stratification_report, DoePlan};
pub use domain::{
    validate_dataset, ApplicationProfile, Configuration, ConfigurationSpace, Dataset,
    Metric, OptimizationOption, OptionKind, OptionLevels, Sample, ValidationReport,
    Violation,
};
pub use error::{Error, Result};
pub use learners::{
    feature_importance, fit_gradient_boosting, fit_random_forest, fit_regression_tree,
    predict_forest, predict_gbm, predict_tree, BoostStage, FeatureImportance,
    GradientBoostedModel, RandomForest, RegressionTree, SampleWeightVector, TreeNode,
    TreeParams,
};
pub use relatedness::{
    accuracy, accuracy_from_mre, jsd, jsd_from_masses, mre, pair_up, pearson,
    relatedness_report, HistogramSpec, PredictionPair, RelatednessReport,
};
pub use store::{
    canonical_json, format_float, load_model, read_dataset, read_plan, read_space,
    read_surface, save_model, write_dataset, write_plan, write_predictions, write_space,
    write_surface, LoadedModel, FORMAT_VERSION,
};
pub use synth::{
    brute_force_best_split, derive_related_env, gen_environment, gen_profile,
    profile_feature_names, Interaction, RelatednessSpec, ResourceLoading, SurfaceParams,
};
pub use transfer::{
    augment, fit_gp, fit_tradaboost, gp_posterior, predict_target, predict_tradaboost,
    transfer, AugmentedRow, BoostRound, FewShotSet, GaussianProcessModel, GpKernelParams,
    SelectionCandidate, SelectionMode, SelectionReport, TlKind, TrAdaBoostModel,
    TransferLearner, TransferModel, TransferOptions,
};
