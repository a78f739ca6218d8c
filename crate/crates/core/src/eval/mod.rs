//! Metrics, stratified cross-validation, single-feature rule scores and a
//! paired significance test.

mod cv;
mod metrics;
mod rules;
mod significance;

pub use cv::{kfold_cv, stratified_folds, CvReport, ModelSpec};
pub use metrics::{f1_report, ClassScores, ConfusionMatrix, EvalReport};
pub use rules::{feature_f1, FeatureRule};
pub use significance::significance_test;
