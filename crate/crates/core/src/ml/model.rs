use serde::{Deserialize, Serialize};

use super::features::{Dataset, Target};
use super::linalg::ridge_least_squares;
use super::tree::{grow, TreeNode};
use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Ridge { alpha: f64 },
    Tree { max_depth: usize, min_leaf: usize },
    /// Per-feature powers `1..=degree` (no cross terms) fed to ridge.
    Polynomial { degree: usize, alpha: f64 },
}

impl ModelKind {
    fn validate(&self) -> Result<()> {
        match *self {
            ModelKind::Ridge { alpha } | ModelKind::Polynomial { alpha, .. } if !(alpha >= 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")))
            }
            ModelKind::Polynomial { degree: 0, .. } => Err(Error::InvalidArgument("degree must be >= 1".into())),
            ModelKind::Tree { min_leaf: 0, .. } => Err(Error::InvalidArgument("min_leaf must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    #[serde(default)]
    pub target: Target,
    /// Scale each feature column to unit variance before fitting linear models.
    #[serde(default)]
    pub standardize: bool,
}

impl ModelConfig {
    pub fn ridge(alpha: f64) -> Self {
        ModelConfig { kind: ModelKind::Ridge { alpha }, target: Target::NextClose, standardize: false }
    }

    pub fn with_target(mut self, target: Target) -> Self {
        self.target = target;
        self
    }

    pub fn standardized(mut self) -> Self {
        self.standardize = true;
        self
    }
}

/// Linear predictor `intercept + weights · transform(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Regressor {
    Linear(LinearParams),
    Tree { root: TreeNode },
}

impl Regressor {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Linear(p) => p.intercept + p.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>(),
            Regressor::Tree { root } => root.predict(x),
        }
    }
}

/// A configured model, fitted or not. Fitted models are immutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub config: ModelConfig,
    pub input_dim: Option<usize>,
    /// One regressor per target component; empty until fitted.
    pub outputs: Vec<Regressor>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    #[serde(flatten)]
    model: RegressionModel,
}

impl RegressionModel {
    pub fn is_fitted(&self) -> bool {
        !self.outputs.is_empty()
    }

    /// Linear parameters of the first output, expressed on the expanded
    /// feature space (for polynomial models, the powers).
    pub fn linear_params(&self) -> Option<&LinearParams> {
        match self.outputs.first()? {
            Regressor::Linear(p) => Some(p),
            Regressor::Tree { .. } => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument { schema_version: MODEL_SCHEMA_VERSION, model: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported model schema_version {}", doc.schema_version)));
        }
        Ok(doc.model)
    }
}

fn expand(kind: &ModelKind, x: &[f64]) -> Vec<f64> {
    match *kind {
        ModelKind::Polynomial { degree, .. } => {
            let mut out = Vec::with_capacity(x.len() * degree);
            for p in 1..=degree as i32 {
                out.extend(x.iter().map(|v| v.powi(p)));
            }
            out
        }
        _ => x.to_vec(),
    }
}

pub fn fit(dataset: &Dataset, config: ModelConfig) -> Result<RegressionModel> {
    config.kind.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.target_width() != config.target.width() {
        return Err(Error::DimensionMismatch { expected: config.target.width(), got: dataset.target_width() });
    }
    let x: Vec<Vec<f64>> = dataset.features.iter().map(|r| expand(&config.kind, r)).collect();
    let mut outputs = Vec::with_capacity(config.target.width());
    for k in 0..config.target.width() {
        let y = dataset.target_column(k);
        let reg = match config.kind {
            ModelKind::Ridge { alpha } | ModelKind::Polynomial { alpha, .. } => {
                Regressor::Linear(fit_ridge(&x, &y, alpha, config.standardize)?)
            }
            ModelKind::Tree { max_depth, min_leaf } => Regressor::Tree { root: grow(&x, &y, max_depth, min_leaf) },
        };
        outputs.push(reg);
    }
    Ok(RegressionModel { config, input_dim: Some(dataset.dim()), outputs })
}

/// Ridge with an unpenalized intercept: centers `x` and `y`, then minimizes
/// `‖Xc w − yc‖² + α‖w‖²`.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], alpha: f64, standardize: bool) -> Result<LinearParams> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = x[0].len();
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let scale: Vec<f64> = if standardize {
        (0..d)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - x_mean[j]).powi(2)).sum::<f64>() / nf;
                if var > 0.0 { var.sqrt() } else { 1.0 }
            })
            .collect()
    } else {
        vec![1.0; d]
    };
    let xc: Vec<Vec<f64>> = x.iter().map(|r| (0..d).map(|j| (r[j] - x_mean[j]) / scale[j]).collect()).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let w_scaled = ridge_least_squares(&xc, &yc, alpha)?;
    let weights: Vec<f64> = w_scaled.iter().zip(&scale).map(|(w, s)| w / s).collect();
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearParams { weights, intercept })
}

/// One-step-ahead prediction. For [`Target::NextOhlcv`] the result is
/// clamped so that `h >= max(o, c)`, `l <= min(o, c)` and `v >= 0`.
pub fn predict_next(model: &RegressionModel, features: &[f64]) -> Result<Vec<f64>> {
    if !model.is_fitted() {
        return Err(Error::UnfittedModel);
    }
    if let Some(d) = model.input_dim {
        if d != features.len() {
            return Err(Error::DimensionMismatch { expected: d, got: features.len() });
        }
    }
    let x = expand(&model.config.kind, features);
    let mut out: Vec<f64> = model.outputs.iter().map(|r| r.predict(&x)).collect();
    if model.config.target == Target::NextOhlcv {
        clamp_ohlcv(&mut out);
    }
    Ok(out)
}

pub(crate) fn clamp_ohlcv(v: &mut [f64]) {
    let (o, c) = (v[0], v[3]);
    v[1] = v[1].max(o.max(c));
    v[2] = v[2].min(o.min(c));
    v[4] = v[4].max(0.0);
}
