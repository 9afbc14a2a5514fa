//! The statistical forecasting track.

mod cv;
mod evaluate;
mod features;
pub(crate) mod linalg;
mod model;
mod tree;

pub use cv::{cross_validate, cross_validate_with, mse, time_blocked_plan, CvPlan, CvReport, Fold, DEFAULT_TEST_FRACTION};
pub use evaluate::{band, evaluate_series, to_csv, to_pretty, EvaluationOptions, EvaluationRow, CSV_HEADER, DEFAULT_ALPHA_GRID};
pub use features::{engineer_features, Dataset, FeatureVector, Target};
pub use model::{fit, fit_ridge, predict_next, LinearParams, ModelConfig, ModelKind, RegressionModel, Regressor, MODEL_SCHEMA_VERSION};
pub use tree::TreeNode;
