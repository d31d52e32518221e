//! Prediction-quality metrics over `(predicted, actual)` pairs.

use crate::error::{Error, Result};

/// Mean absolute error `sum |P - r| / n`.
pub fn mae(predictions: &[(f64, f64)]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidParameter(
            "MAE of an empty prediction list is undefined".into(),
        ));
    }
    let total: f64 = predictions.iter().map(|(p, r)| (p - r).abs()).sum();
    Ok(total / predictions.len() as f64)
}

/// Precision and recall at a relevance threshold: an item is relevant when
/// its actual rating reaches the threshold and recommended when its
/// predicted rating does. Empty denominators yield 0 so the metrics stay
/// total over degenerate folds.
pub fn precision_recall(predictions: &[(f64, f64)], threshold: f64) -> Result<(f64, f64)> {
    if predictions.is_empty() {
        return Err(Error::InvalidParameter(
            "precision/recall of an empty prediction list is undefined".into(),
        ));
    }
    let mut relevant = 0usize;
    let mut recommended = 0usize;
    let mut hits = 0usize;
    for &(predicted, actual) in predictions {
        let is_relevant = actual >= threshold;
        let is_recommended = predicted >= threshold;
        relevant += usize::from(is_relevant);
        recommended += usize::from(is_recommended);
        hits += usize::from(is_relevant && is_recommended);
    }
    let precision = if recommended == 0 {
        0.0
    } else {
        hits as f64 / recommended as f64
    };
    let recall = if relevant == 0 {
        0.0
    } else {
        hits as f64 / relevant as f64
    };
    Ok((precision, recall))
}

/// Harmonic mean of precision and recall, 0 when both vanish.
pub fn f1(precision: f64, recall: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&precision));
    debug_assert!((0.0..=1.0).contains(&recall));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
