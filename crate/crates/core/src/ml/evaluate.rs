//! Per-token backtest summary: best ridge alpha over a grid, its CV score and
//! terminal-block test MSE, plus a coarse qualitative band.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_with, CvReport};
use super::features::{Dataset, Target};
use super::model::ModelConfig;
use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

pub const DEFAULT_ALPHA_GRID: [f64; 3] = [0.01, 0.1, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub token: String,
    pub alpha: f64,
    pub cv_score: f64,
    pub test_mse: f64,
    pub band: String,
}

#[derive(Debug, Clone)]
pub struct EvaluationOptions {
    pub alphas: Vec<f64>,
    pub folds: usize,
    pub test_fraction: f64,
    /// When set, only the last `horizon` candles of each series are used.
    pub horizon: Option<usize>,
    pub standardize: bool,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        EvaluationOptions {
            alphas: DEFAULT_ALPHA_GRID.to_vec(),
            folds: 5,
            test_fraction: super::cv::DEFAULT_TEST_FRACTION,
            horizon: None,
            standardize: false,
        }
    }
}

/// Qualitative label from the test MSE.
pub fn band(test_mse: f64) -> &'static str {
    match test_mse {
        m if m < 1e-5 => "best performer",
        m if m < 1e-4 => "excellent fit",
        m if m < 1e-3 => "good fit",
        m if m < 1e-2 => "medium fit",
        _ => "large error, unstable",
    }
}

pub fn evaluate_series(series: &CandleSeries, options: &EvaluationOptions) -> Result<EvaluationRow> {
    let series = match options.horizon {
        Some(h) if h < series.len() => series.with_candles(series.candles[series.len() - h..].to_vec()),
        _ => series.clone(),
    };
    let dataset = Dataset::from_series(&series, Target::NextClose)?;
    let mut best: Option<(f64, CvReport)> = None;
    for &alpha in &options.alphas {
        let mut cfg = ModelConfig::ridge(alpha);
        cfg.standardize = options.standardize;
        let report = cross_validate_with(&dataset, options.folds, cfg, options.test_fraction)?;
        if best.as_ref().is_none_or(|(_, b)| report.cv_score > b.cv_score) {
            best = Some((alpha, report));
        }
    }
    let (alpha, report) = best.ok_or_else(|| Error::InvalidArgument("empty alpha grid".into()))?;
    Ok(EvaluationRow {
        token: series.symbol.clone(),
        alpha,
        cv_score: report.cv_score,
        test_mse: report.test_mse,
        band: band(report.test_mse).to_string(),
    })
}

pub const CSV_HEADER: &str = "token,alpha,cv_score,test_mse";

/// CSV with the fixed header `token,alpha,cv_score,test_mse,band`.
pub fn to_csv(rows: &[EvaluationRow]) -> String {
    let mut out = format!("{CSV_HEADER},band\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:e},{:e},\"{}\"", r.token, r.alpha, r.cv_score, r.test_mse, r.band);
    }
    out
}

pub fn to_pretty(rows: &[EvaluationRow]) -> String {
    let mut out = format!("{:<8} {:>6} {:>16} {:>16}  {}\n", "Token", "Alpha", "CV Score (Best)", "MSE (Test)", "Evaluation");
    for r in rows {
        let _ = writeln!(out, "{:<8} {:>6} {:>16.6e} {:>16.6e}  {}", r.token, r.alpha, r.cv_score, r.test_mse, r.band);
    }
    out
}
