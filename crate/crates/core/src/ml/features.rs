use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{Candle, CandleSeries};

/// `[o, h, l, c, v, h - l, c - o]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 7]);

impl FeatureVector {
    pub const LEN: usize = 7;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn engineer_features(candle: &Candle) -> FeatureVector {
    FeatureVector([candle.o, candle.h, candle.l, candle.c, candle.v, candle.h - candle.l, candle.c - candle.o])
}

/// What the model predicts one step ahead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Target {
    #[default]
    NextClose,
    /// `[o, h, l, c, v]` of the next candle.
    NextOhlcv,
}

impl Target {
    pub fn width(self) -> usize {
        match self {
            Target::NextClose => 1,
            Target::NextOhlcv => 5,
        }
    }

    pub fn extract(self, candle: &Candle) -> Vec<f64> {
        match self {
            Target::NextClose => vec![candle.c],
            Target::NextOhlcv => vec![candle.o, candle.h, candle.l, candle.c, candle.v],
        }
    }
}

/// Supervised rows in time order. `targets[i]` is aligned one step ahead of
/// `features[i]` when built from a series.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::LengthMismatch { left: features.len(), right: targets.len() });
        }
        if let Some(first) = features.first() {
            let d = first.len();
            if let Some(bad) = features.iter().find(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
            }
            let w = targets[0].len();
            if let Some(bad) = targets.iter().find(|r| r.len() != w) {
                return Err(Error::DimensionMismatch { expected: w, got: bad.len() });
            }
        }
        Ok(Dataset { features, targets })
    }

    /// Single-output dataset.
    pub fn single(features: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        Dataset::new(features, y.into_iter().map(|v| vec![v]).collect())
    }

    /// `(x_t, y_{t+1})` pairs from consecutive candles.
    pub fn from_series(series: &CandleSeries, target: Target) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::EmptyDataset);
        }
        let features = series.candles[..series.len() - 1]
            .iter()
            .map(|c| engineer_features(c).0.to_vec())
            .collect();
        let targets = series.candles[1..].iter().map(|c| target.extract(c)).collect();
        Dataset::new(features, targets)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn target_width(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset { features: self.features[range.clone()].to_vec(), targets: self.targets[range].to_vec() }
    }

    /// Column `k` of the targets.
    pub fn target_column(&self, k: usize) -> Vec<f64> {
        self.targets.iter().map(|t| t[k]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Resolution;

    #[test]
    fn feature_order() {
        let f = engineer_features(&Candle::new(0, 2.0, 5.0, 1.0, 4.0, 100.0));
        assert_eq!(f.0, [2.0, 5.0, 1.0, 4.0, 100.0, 4.0, 2.0]);
        let doji = engineer_features(&Candle::new(0, 3.0, 3.0, 3.0, 3.0, 7.0));
        assert_eq!(&doji.0[5..], &[0.0, 0.0]);
    }

    #[test]
    fn demo_candle() {
        // First row of fixtures/candles/BTC_1d.csv, derived by hand.
        let f = engineer_features(&Candle::new(1_704_067_200, 42_280.5, 42_860.0, 42_010.25, 42_655.75, 1_532.4));
        assert_eq!(f.0, [42_280.5, 42_860.0, 42_010.25, 42_655.75, 1_532.4, 849.75, 375.25]);
    }

    #[test]
    fn series_dataset_aligned_one_step_ahead() {
        let candles = (0..4).map(|i| Candle::new(i * 3600, 1.0 + i as f64, 2.0 + i as f64, 1.0, 1.5 + i as f64, 1.0)).collect();
        let s = CandleSeries::new("X", Resolution::OneHour, candles).unwrap();
        let d = Dataset::from_series(&s, Target::NextClose).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.features[0][3], 1.5);
        assert_eq!(d.targets[0], vec![2.5]);
        assert_eq!(Dataset::from_series(&s, Target::NextOhlcv).unwrap().target_width(), 5);
    }
}
