use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature order: relevance, recency, credibility, sentiment match,
/// normalized graph degree.
pub const FEATURE_NAMES: [&str; 5] = ["relevance", "recency", "credibility", "sentiment_match", "graph_degree_norm"];
pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `logistic(theta · phi)`.
pub fn score_candidate(theta: &[f64], phi: &[f64]) -> Result<f64> {
    if theta.len() != phi.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: phi.len() });
    }
    Ok(logistic(theta.iter().zip(phi).map(|(t, p)| t * p).sum()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyWeights {
    pub theta: Vec<f64>,
    pub eta: f64,
}

impl PolicyWeights {
    pub fn zeros(eta: f64) -> Self {
        PolicyWeights { theta: vec![0.0; FEATURE_DIM], eta }
    }
}

impl Default for PolicyWeights {
    fn default() -> Self {
        PolicyWeights::zeros(0.05)
    }
}

/// One gradient step on the log loss: `theta - eta * (p - y) * phi`.
pub fn update_policy(weights: &PolicyWeights, phi: &[f64], y: f64) -> Result<PolicyWeights> {
    let p = score_candidate(&weights.theta, phi)?;
    let g = p - y;
    let theta = weights.theta.iter().zip(phi).map(|(t, x)| t - weights.eta * g * x).collect();
    Ok(PolicyWeights { theta, eta: weights.eta })
}

/// `-[y ln p + (1 - y) ln(1 - p)]`.
pub fn log_loss(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}
