//! Confusion-matrix metrics for binary predictions (1 = adaptive).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("prediction and label lengths differ ({pred} vs {truth})")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("cannot evaluate an empty prediction set")]
    Empty,
}

/// Counts and derived ratios. A ratio whose denominator is zero is stored
/// as 0 and its flag is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

impl EvalReport {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: f64, den: f64| {
            if den == 0.0 {
                (0.0, true)
            } else {
                (num / den, false)
            }
        };
        let total = (tp + tn + fp + fn_) as f64;
        let accuracy = if total == 0.0 {
            0.0
        } else {
            (tp + tn) as f64 / total
        };
        let (precision, precision_undefined) = ratio(tp as f64, (tp + fp) as f64);
        let (recall, recall_undefined) = ratio(tp as f64, (tp + fn_) as f64);
        let (f1, f1_undefined) = ratio(2.0 * precision * recall, precision + recall);
        EvalReport {
            tp,
            tn,
            fp,
            fn_,
            accuracy,
            precision,
            recall,
            f1,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Compares predicted labels with true labels.
pub fn evaluate(pred: &[u8], truth: &[u8]) -> Result<EvalReport, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, tn, fp, fn_))
}

/// F1 score of `pred` against `truth`, 0 when undefined.
pub fn f1_score(pred: &[u8], truth: &[u8]) -> Result<f64, MetricsError> {
    evaluate(pred, truth).map(|r| r.f1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let r = evaluate(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(
            (r.accuracy, r.precision, r.recall, r.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn fixture_counts() {
        let r = EvalReport::from_counts(5, 90, 3, 2);
        assert_eq!(r.accuracy, 0.95);
        assert_eq!(r.precision, 0.625);
        assert_eq!(r.recall, 5.0 / 7.0);
        let f1 = 2.0 * (0.625 * (5.0 / 7.0)) / (0.625 + 5.0 / 7.0);
        assert_eq!(r.f1, f1);
        assert!((r.f1 - 0.667).abs() < 5e-4);
    }

    #[test]
    fn zero_division_flags() {
        let r = evaluate(&[0, 0, 0], &[1, 0, 1]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert!(r.precision_undefined && r.f1_undefined && !r.recall_undefined);
        assert!(matches!(
            evaluate(&[0], &[0, 1]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }
}
