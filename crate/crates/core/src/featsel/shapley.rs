use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{check_both_classes, check_xy, top_k, FeatselError, SelectionResult, SelectorKind};
use crate::learners::{majority_label, stratified_folds, LearnError, Model};
use crate::matrix::Matrix;
use crate::metrics;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapleyConfig {
    pub n_permutations: usize,
    pub seed: u64,
    /// The validation set is one stratified fold out of this many.
    pub validation_folds: usize,
    pub k_select: usize,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        ShapleyConfig {
            n_permutations: 30,
            seed: 42,
            validation_folds: 3,
            k_select: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub full_value: f64,
    pub empty_value: f64,
    pub n_coalitions: usize,
}

/// Monte-Carlo permutation Shapley values of a set function over
/// `n_feat` players. Permutation `p` is drawn from `child_seed(seed, p)`;
/// each distinct coalition is evaluated once, in parallel.
pub fn shapley_values<F>(
    n_feat: usize,
    n_permutations: usize,
    seed: u64,
    value: F,
) -> Result<ShapleyEstimate, FeatselError>
where
    F: Fn(&[usize]) -> Result<f64, FeatselError> + Sync,
{
    if n_permutations == 0 {
        return Err(FeatselError::InvalidParams(
            "n_permutations must be >= 1".into(),
        ));
    }
    if n_feat == 0 || n_feat > 63 {
        return Err(FeatselError::InvalidParams(format!(
            "{n_feat} features; supported range is 1..=63"
        )));
    }
    let perms: Vec<Vec<usize>> = (0..n_permutations)
        .map(|p| {
            let mut order: Vec<usize> = (0..n_feat).collect();
            order.shuffle(&mut rng::child_rng(seed, p as u64));
            order
        })
        .collect();
    let mut masks = BTreeMap::new();
    for order in &perms {
        let mut mask = 0u64;
        masks.insert(mask, 0.0);
        for &f in order {
            mask |= 1 << f;
            masks.insert(mask, 0.0);
        }
    }
    let keys: Vec<u64> = masks.keys().copied().collect();
    let evaluated: Vec<f64> = keys
        .par_iter()
        .map(|&mask| {
            let cols: Vec<usize> = (0..n_feat).filter(|f| mask & (1 << f) != 0).collect();
            value(&cols)
        })
        .collect::<Result<_, _>>()?;
    for (k, v) in keys.iter().zip(evaluated) {
        masks.insert(*k, v);
    }
    let mut contrib = vec![Vec::with_capacity(n_permutations); n_feat];
    for order in &perms {
        let mut mask = 0u64;
        for &f in order {
            let before = masks[&mask];
            mask |= 1 << f;
            contrib[f].push(masks[&mask] - before);
        }
    }
    let m = n_permutations as f64;
    let values: Vec<f64> = contrib.iter().map(|c| c.iter().sum::<f64>() / m).collect();
    let std_errors = contrib
        .iter()
        .zip(&values)
        .map(|(c, mean)| {
            if n_permutations < 2 {
                0.0
            } else {
                (c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0) / m).sqrt()
            }
        })
        .collect();
    let full = (1u64 << n_feat) - 1;
    Ok(ShapleyEstimate {
        values,
        std_errors,
        full_value: masks[&full],
        empty_value: masks[&0],
        n_coalitions: masks.len(),
    })
}

/// Shapley importance of each column with validation F1 as the payoff.
/// Coalition models are trained with `trainer` on the coalition's columns;
/// the empty coalition predicts the training majority label.
pub fn shapley_importance<T>(
    x: &Matrix,
    y: &[u8],
    trainer: T,
    cfg: &ShapleyConfig,
) -> Result<SelectionResult, FeatselError>
where
    T: Fn(&Matrix, &[u8]) -> Result<Model, LearnError> + Sync,
{
    check_xy(x, y.len())?;
    check_both_classes(y)?;
    if cfg.validation_folds < 2 {
        return Err(FeatselError::InvalidParams(
            "validation_folds must be >= 2".into(),
        ));
    }
    let folds = stratified_folds(y, cfg.validation_folds, cfg.seed)?;
    let (val, fit): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] == 0);
    let (x_fit, x_val) = (x.select_rows(&fit), x.select_rows(&val));
    let y_fit: Vec<u8> = fit.iter().map(|&i| y[i]).collect();
    let y_val: Vec<u8> = val.iter().map(|&i| y[i]).collect();
    let f1 = |pred: &[u8]| {
        metrics::f1_score(pred, &y_val).map_err(|e| FeatselError::InvalidParams(e.to_string()))
    };
    let est = shapley_values(x.cols(), cfg.n_permutations, cfg.seed, |cols| {
        if cols.is_empty() {
            return f1(&vec![majority_label(&y_fit); y_val.len()]);
        }
        let model = trainer(&x_fit.select_columns(cols), &y_fit)?;
        f1(&model.predict_labels(&x_val.select_columns(cols))?)
    })?;
    Ok(SelectionResult {
        method: SelectorKind::Shapley,
        selected: top_k(&est.values, cfg.k_select),
        scores: est.values,
        std_errors: Some(est.std_errors),
        degenerate_features: Vec::new(),
        config: serde_json::json!({
            "n_permutations": cfg.n_permutations,
            "seed": cfg.seed,
            "validation_folds": cfg.validation_folds,
            "k_select": cfg.k_select,
            "full_value": est.full_value,
            "empty_value": est.empty_value,
        }),
    })
}
