//! Linear SVM trained in the primal with Pegasos-style stochastic
//! subgradient steps.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_data, require_both_classes, LearnError, Prediction};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
}

impl LinearSvmModel {
    pub fn new(w: Vec<f64>, b: f64, lambda: f64) -> Self {
        LinearSvmModel { w, b, lambda }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// Label 1 when `w.x + b > 0`; the score is the signed margin.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        if x.len() != self.w.len() {
            return Err(LearnError::DimensionMismatch {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        let d = self.decision(x);
        Ok(Prediction {
            label: (d > 0.0) as u8,
            score: d,
        })
    }

    /// `lambda/2 * (|w|^2 + b^2) + mean hinge loss`, the objective minimised
    /// by training (the bias is regularised as an augmented feature).
    pub fn objective(&self, x: &Matrix, y: &[u8]) -> f64 {
        let reg = 0.5 * self.lambda * (self.w.iter().map(|v| v * v).sum::<f64>() + self.b * self.b);
        let hinge: f64 = (0..x.rows())
            .map(|i| {
                let s = if y[i] == 1 { 1.0 } else { -1.0 };
                (1.0 - s * self.decision(x.row(i))).max(0.0)
            })
            .sum();
        reg + hinge / x.rows() as f64
    }
}

/// Each epoch visits every row once in an order shuffled from
/// `child_seed(seed, epoch)`. The returned weights average the iterates of
/// the second half of training.
pub fn train_linear_svm(
    x: &Matrix,
    y: &[u8],
    params: &SvmParams,
    seed: u64,
) -> Result<LinearSvmModel, LearnError> {
    check_training_data(x, y)?;
    require_both_classes(y)?;
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(LearnError::InvalidParams(format!(
            "lambda must be > 0, got {}",
            params.lambda
        )));
    }
    if params.epochs == 0 {
        return Err(LearnError::InvalidParams("epochs must be >= 1".into()));
    }
    let (n, d) = (x.rows(), x.cols());
    let total_steps = n * params.epochs;
    let average_from = total_steps / 2;
    // bias stored as w[d] against a constant feature 1
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut n_avg = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for epoch in 0..params.epochs {
        let mut rng = rng::child_rng(seed, epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let row = x.row(i);
            let s = if y[i] == 1 { 1.0 } else { -1.0 };
            let margin = s * (row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * params.lambda;
            for v in &mut w {
                *v *= shrink;
            }
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(row) {
                    *wj += eta * s * xj;
                }
                w[d] += eta * s;
            }
            if t > average_from {
                n_avg += 1;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / n_avg as f64;
                }
            }
        }
    }
    if avg.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::InvalidParams("SVM weights diverged".into()));
    }
    let b = avg.pop().unwrap_or(0.0);
    Ok(LinearSvmModel {
        w: avg,
        b,
        lambda: params.lambda,
    })
}
