//! Feature-selection baselines: Pearson correlation, ReliefF, LASSO and
//! Monte-Carlo permutation Shapley importance.

mod lasso;
mod relieff;
mod shapley;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use lasso::{
    lasso_fit, lasso_lambda_max, lasso_path, lasso_select, standardize_columns, LassoConfig,
    LassoFit,
};
pub use relieff::{relieff_weights, ReliefConfig};
pub use shapley::{shapley_importance, shapley_values, ShapleyConfig, ShapleyEstimate};

use crate::learners::LearnError;
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatselError {
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("labels contain a single class")]
    SingleClassInput,
    #[error("column {feature} has variance {variance}, expected 1 (standardize first)")]
    NotStandardized { feature: usize, variance: f64 },
    #[error("{rows} rows in X but {labels} targets")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid selector parameters: {0}")]
    InvalidParams(String),
    #[error("trainer failed: {0}")]
    Trainer(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectorKind {
    Pearson,
    Shapley,
    Lasso,
    Relieff,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 4] = [
        SelectorKind::Pearson,
        SelectorKind::Shapley,
        SelectorKind::Lasso,
        SelectorKind::Relieff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Pearson => "pearson",
            SelectorKind::Shapley => "shapley",
            SelectorKind::Lasso => "lasso",
            SelectorKind::Relieff => "relieff",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = FeatselError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(SelectorKind::Pearson),
            "shapley" | "shap" => Ok(SelectorKind::Shapley),
            "lasso" => Ok(SelectorKind::Lasso),
            "relieff" => Ok(SelectorKind::Relieff),
            other => Err(FeatselError::InvalidParams(format!(
                "unknown selector '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: SelectorKind,
    pub scores: Vec<f64>,
    /// Chosen feature indices, best first.
    pub selected: Vec<usize>,
    /// Monte-Carlo standard errors of `scores` (Shapley only).
    pub std_errors: Option<Vec<f64>>,
    /// Features whose score was forced to 0 (zero variance).
    pub degenerate_features: Vec<usize>,
    pub config: serde_json::Value,
}

/// Indices of the `k` largest scores, ties to the lower index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub(crate) fn check_xy(x: &Matrix, n_targets: usize) -> Result<(), FeatselError> {
    if x.rows() != n_targets {
        return Err(FeatselError::LengthMismatch {
            rows: x.rows(),
            labels: n_targets,
        });
    }
    Ok(())
}

pub(crate) fn check_both_classes(y: &[u8]) -> Result<(), FeatselError> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(FeatselError::SingleClassInput);
    }
    Ok(())
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (
        mean,
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n,
    )
}

/// Ranks features by `|corr(X_f, y)|`. A zero-variance column (or a
/// constant target) scores 0 and is flagged.
pub fn pearson_select(x: &Matrix, y: &[f64], k: usize) -> Result<SelectionResult, FeatselError> {
    check_xy(x, y.len())?;
    if x.rows() < 2 {
        return Err(FeatselError::TooFewSamples {
            needed: 2,
            got: x.rows(),
        });
    }
    if k == 0 {
        return Err(FeatselError::InvalidParams("k must be >= 1".into()));
    }
    let (my, vy) = mean_var(y);
    let mut scores = Vec::with_capacity(x.cols());
    let mut degenerate = Vec::new();
    for f in 0..x.cols() {
        let col = x.column(f);
        let (mx, vx) = mean_var(&col);
        if vx <= 0.0 || vy <= 0.0 {
            scores.push(0.0);
            degenerate.push(f);
            continue;
        }
        let cov = col
            .iter()
            .zip(y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / y.len() as f64;
        scores.push((cov / (vx.sqrt() * vy.sqrt())).abs().min(1.0));
    }
    Ok(SelectionResult {
        method: SelectorKind::Pearson,
        selected: top_k(&scores, k),
        scores,
        std_errors: None,
        degenerate_features: degenerate,
        config: serde_json::json!({ "k": k }),
    })
}

pub(crate) fn labels_as_f64(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| v as f64).collect()
}
