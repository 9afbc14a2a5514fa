use crate::error::{Error, Result};

/// `1 - |predicted - actual| / actual`. Not clamped: errors above 100% give
/// negative values.
pub fn accuracy(predicted: f64, actual: f64) -> Result<f64> {
    if actual.is_nan() || actual <= 0.0 {
        return Err(Error::NonPositiveActual(actual));
    }
    Ok(1.0 - (predicted - actual).abs() / actual)
}

/// Mean [`accuracy`] over aligned close sequences.
pub fn mean_accuracy(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch { left: predicted.len(), right: actual.len() });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for (p, a) in predicted.iter().zip(actual) {
        sum += accuracy(*p, *a)?;
    }
    Ok(sum / predicted.len() as f64)
}

fn direction(from: f64, to: f64) -> std::cmp::Ordering {
    to.partial_cmp(&from).unwrap_or(std::cmp::Ordering::Equal)
}

/// Fraction of steps whose direction of change matches. `anchor` is the last
/// observed close and precedes step 1 in both sequences. A zero change only
/// matches another zero change.
pub fn win_rate(predicted: &[f64], actual: &[f64], anchor: f64) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch { left: predicted.len(), right: actual.len() });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut prev_p, mut prev_a) = (anchor, anchor);
    let mut hits = 0usize;
    for (&p, &a) in predicted.iter().zip(actual) {
        if direction(prev_p, p) == direction(prev_a, a) {
            hits += 1;
        }
        prev_p = p;
        prev_a = a;
    }
    Ok(hits as f64 / predicted.len() as f64)
}
