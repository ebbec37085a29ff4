use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_data, LearnError, ModelSpec};
use crate::matrix::Matrix;
use crate::metrics;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Index of the winning grid point.
    pub best: usize,
    pub best_spec: ModelSpec,
    /// `fold_scores[g][f]`: F1 of grid point `g` on held-out fold `f`.
    pub fold_scores: Vec<Vec<f64>>,
    pub mean_scores: Vec<f64>,
    pub folds: Vec<usize>,
}

/// Fold id per row. Each class is shuffled with its own stream and dealt
/// round-robin, continuing where the previous class stopped so fold sizes
/// differ by at most one.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    if k < 2 {
        return Err(LearnError::InvalidParams(format!(
            "k_folds must be >= 2, got {k}"
        )));
    }
    if y.len() < k {
        return Err(LearnError::TooFewSamples {
            needed: k,
            got: y.len(),
        });
    }
    let mut folds = vec![0; y.len()];
    let mut next = 0;
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng::child_rng(seed, class as u64));
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    Ok(folds)
}

/// Mean held-out F1 for every grid point over the same stratified folds.
/// Models in every fold train with `seed`.
pub fn cross_validate(
    x: &Matrix,
    y: &[u8],
    grid: &[ModelSpec],
    k_folds: usize,
    seed: u64,
) -> Result<CvResult, LearnError> {
    check_training_data(x, y)?;
    if grid.is_empty() {
        return Err(LearnError::InvalidParams("parameter grid is empty".into()));
    }
    let folds = stratified_folds(y, k_folds, seed)?;
    let mut fold_scores = Vec::with_capacity(grid.len());
    for spec in grid {
        let mut scores = Vec::with_capacity(k_folds);
        for f in 0..k_folds {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..y.len()).partition(|&i| folds[i] == f);
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let yte: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            let model = spec.fit(&x.select_rows(&train), &ytr, seed)?;
            let pred = model.predict_labels(&x.select_rows(&test))?;
            scores.push(
                metrics::f1_score(&pred, &yte)
                    .map_err(|e| LearnError::InvalidParams(e.to_string()))?,
            );
        }
        fold_scores.push(scores);
    }
    let mean_scores: Vec<f64> = fold_scores
        .iter()
        .map(|s| s.iter().sum::<f64>() / s.len() as f64)
        .collect();
    let mut best = 0;
    for (g, &m) in mean_scores.iter().enumerate() {
        if m > mean_scores[best] {
            best = g;
        }
    }
    Ok(CvResult {
        best,
        best_spec: grid[best],
        fold_scores,
        mean_scores,
        folds,
    })
}
