use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::model::{fit, predict_next, ModelConfig};
use crate::error::{Error, Result};

/// Mean squared difference.
pub fn mse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: actuals.len() });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(predictions.iter().zip(actuals).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / predictions.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    /// Negated mean validation MSE over folds; never positive.
    pub cv_score: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub validate: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvPlan {
    pub folds: Vec<Fold>,
    /// Terminal block never seen during cross-validation.
    pub test: Range<usize>,
}

/// Share of rows held out as the terminal test block.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// Forward-chaining split: the last `test_fraction` of rows is the test
/// block; the rest is cut into `k + 1` contiguous blocks and fold `i` trains
/// on blocks `0..i` and validates on block `i`.
pub fn time_blocked_plan(n: usize, k: usize, test_fraction: f64) -> Result<CvPlan> {
    if k < 2 {
        return Err(Error::TooFewSamples(format!("need at least 2 folds, got {k}")));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!("test_fraction {test_fraction} outside [0, 1)")));
    }
    let test_len = ((n as f64 * test_fraction).round() as usize).max(1);
    let dev = n.saturating_sub(test_len);
    let block = dev / (k + 1);
    if n < k || block == 0 {
        return Err(Error::TooFewSamples(format!("{n} rows cannot fill {k} folds plus a test block")));
    }
    let first = dev - block * k;
    let folds = (0..k)
        .map(|i| {
            let start = first + i * block;
            Fold { train: 0..start, validate: start..start + block }
        })
        .collect();
    Ok(CvPlan { folds, test: dev..n })
}

fn block_mse(train: &Dataset, eval: &Dataset, config: ModelConfig) -> Result<f64> {
    let model = fit(train, config)?;
    let mut preds = Vec::new();
    let mut actual = Vec::new();
    for (x, y) in eval.features.iter().zip(&eval.targets) {
        preds.extend(predict_next(&model, x)?);
        actual.extend(y.iter().copied());
    }
    mse(&preds, &actual)
}

pub fn cross_validate(dataset: &Dataset, folds: usize, config: ModelConfig) -> Result<CvReport> {
    cross_validate_with(dataset, folds, config, DEFAULT_TEST_FRACTION)
}

pub fn cross_validate_with(dataset: &Dataset, folds: usize, config: ModelConfig, test_fraction: f64) -> Result<CvReport> {
    let plan = time_blocked_plan(dataset.len(), folds, test_fraction)?;
    let mut total = 0.0;
    for fold in &plan.folds {
        total += block_mse(&dataset.slice(fold.train.clone()), &dataset.slice(fold.validate.clone()), config)?;
    }
    let cv_score = -(total / folds as f64);
    let test_mse = block_mse(&dataset.slice(0..plan.test.start), &dataset.slice(plan.test.clone()), config)?;
    Ok(CvReport { folds, cv_score, test_mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.5);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { left: 1, right: 2 })));
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn plan_shapes() {
        let plan = time_blocked_plan(100, 4, 0.2).unwrap();
        assert_eq!(plan.test, 80..100);
        assert_eq!(plan.folds.len(), 4);
        assert_eq!(plan.folds[0], Fold { train: 0..16, validate: 16..32 });
        assert_eq!(plan.folds[3].validate, 64..80);
        assert!(matches!(time_blocked_plan(3, 2, 0.2), Err(Error::TooFewSamples(_))));
        assert!(matches!(time_blocked_plan(50, 1, 0.2), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn perfect_fit_scores_zero() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let ys = xs.iter().map(|r| 2.0 * r[0] - 5.0).collect();
        let r = cross_validate(&Dataset::single(xs, ys).unwrap(), 3, ModelConfig::ridge(0.0)).unwrap();
        assert!(r.cv_score.abs() < 1e-18 && r.cv_score <= 0.0, "{r:?}");
        assert!(r.test_mse < 1e-18);
    }

    #[test]
    fn mean_predictor_fold_mse_is_variance_about_training_mean() {
        // A saturated ridge penalty collapses to the training-mean predictor,
        // so each fold's MSE is the validation spread around that mean.
        let ys: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64).collect();
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 3) as f64]).collect();
        let d = Dataset::single(xs, ys.clone()).unwrap();
        let plan = time_blocked_plan(30, 2, 0.2).unwrap();
        let r = cross_validate(&d, 2, ModelConfig::ridge(1e18)).unwrap();
        let oracle: f64 = plan
            .folds
            .iter()
            .map(|f| {
                let train = &ys[f.train.clone()];
                let m = train.iter().sum::<f64>() / train.len() as f64;
                let val = &ys[f.validate.clone()];
                val.iter().map(|v| (v - m).powi(2)).sum::<f64>() / val.len() as f64
            })
            .sum::<f64>()
            / 2.0;
        assert!((r.cv_score + oracle).abs() < 1e-9, "{} vs {}", r.cv_score, -oracle);
    }

    proptest! {
        #[test]
        fn folds_never_train_on_future(n in 3usize..400, k in 2usize..=10) {
            if let Ok(plan) = time_blocked_plan(n, k, DEFAULT_TEST_FRACTION) {
                for f in &plan.folds {
                    prop_assert!(f.train.end <= f.validate.start);
                    prop_assert!(!f.validate.is_empty());
                    prop_assert!(f.validate.end <= plan.test.start);
                }
            }
        }

        #[test]
        fn mse_permutation_invariant(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50), seed in any::<u64>()) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let pp: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let aa: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
            let base = mse(&p, &a).unwrap();
            prop_assert!((base - mse(&pp, &aa).unwrap()).abs() <= 1e-9 * base.max(1.0));
        }
    }
}
