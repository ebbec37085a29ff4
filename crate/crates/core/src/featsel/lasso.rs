use serde::{Deserialize, Serialize};

use super::{check_xy, labels_as_f64, FeatselError, SelectionResult, SelectorKind};
use crate::matrix::Matrix;

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;
const VARIANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Penalty as a fraction of `lambda_max`; ignored when `lambda` is set.
    pub lambda_ratio: f64,
    pub lambda: Option<f64>,
    pub k_select: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        LassoConfig {
            lambda_ratio: 0.05,
            lambda: None,
            k_select: 4,
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_standardized(x: &Matrix) -> Result<Vec<f64>, FeatselError> {
    let n = x.rows() as f64;
    let mut sq = Vec::with_capacity(x.cols());
    for f in 0..x.cols() {
        let col = x.column(f);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if (var - 1.0).abs() > VARIANCE_TOL {
            return Err(FeatselError::NotStandardized {
                feature: f,
                variance: var,
            });
        }
        sq.push(col.iter().map(|v| v * v).sum::<f64>() / n);
    }
    Ok(sq)
}

/// `max_f |X_f' y| / N`: the smallest penalty with an all-zero solution.
pub fn lasso_lambda_max(x: &Matrix, y: &[f64]) -> f64 {
    let n = x.rows() as f64;
    (0..x.cols())
        .map(|f| (0..x.rows()).map(|i| x.get(i, f) * y[i]).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

fn descend(x: &Matrix, y: &[f64], lambda: f64, sq: &[f64], beta: &mut [f64]) -> (usize, bool) {
    let (n, d) = (x.rows(), x.cols());
    let mut resid: Vec<f64> = (0..n)
        .map(|i| {
            y[i] - x
                .row(i)
                .iter()
                .zip(beta.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect();
    for sweep in 1..=LASSO_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..d {
            let old = beta[j];
            let rho = (0..n).map(|i| x.get(i, j) * resid[i]).sum::<f64>() / n as f64 + sq[j] * old;
            let new = soft_threshold(rho, lambda) / sq[j];
            if new != old {
                let delta = new - old;
                for (i, r) in resid.iter_mut().enumerate() {
                    *r -= x.get(i, j) * delta;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < LASSO_TOL {
            return (sweep, true);
        }
    }
    (LASSO_MAX_SWEEPS, false)
}

fn check_inputs(x: &Matrix, y: &[f64], lambda: f64) -> Result<Vec<f64>, FeatselError> {
    check_xy(x, y.len())?;
    if x.rows() < 2 {
        return Err(FeatselError::TooFewSamples {
            needed: 2,
            got: x.rows(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FeatselError::InvalidParams(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    check_standardized(x)
}

/// Cyclic coordinate descent on `1/(2N) |y - X b|^2 + lambda |b|_1`.
/// Columns of `x` must have unit population variance.
pub fn lasso_fit(x: &Matrix, y: &[f64], lambda: f64) -> Result<LassoFit, FeatselError> {
    let sq = check_inputs(x, y, lambda)?;
    let mut beta = vec![0.0; x.cols()];
    let (sweeps, converged) = descend(x, y, lambda, &sq, &mut beta);
    Ok(LassoFit {
        beta,
        lambda,
        sweeps,
        converged,
    })
}

/// Fits each penalty in the given order, warm-starting from the previous
/// solution.
pub fn lasso_path(x: &Matrix, y: &[f64], lambdas: &[f64]) -> Result<Vec<LassoFit>, FeatselError> {
    let mut beta = vec![0.0; x.cols()];
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let sq = check_inputs(x, y, lambda)?;
        let (sweeps, converged) = descend(x, y, lambda, &sq, &mut beta);
        out.push(LassoFit {
            beta: beta.clone(),
            lambda,
            sweeps,
            converged,
        });
    }
    Ok(out)
}

/// Population z-score of each column. Constant columns become 0 and their
/// indices are returned.
pub fn standardize_columns(x: &Matrix) -> (Matrix, Vec<usize>) {
    let n = x.rows() as f64;
    let mut z = x.clone();
    let mut constant = Vec::new();
    for f in 0..x.cols() {
        let col = x.column(f);
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if sd <= 0.0 {
            constant.push(f);
        }
        for (i, v) in col.iter().enumerate() {
            z.set(i, f, if sd > 0.0 { (v - mean) / sd } else { 0.0 });
        }
    }
    (z, constant)
}

/// Standardizes `x`, centres the labels and keeps up to `k_select`
/// nonzero coefficients ranked by `|beta|`. Constant columns are dropped
/// from the fit and score 0.
pub fn lasso_select(
    x: &Matrix,
    y: &[u8],
    cfg: &LassoConfig,
) -> Result<SelectionResult, FeatselError> {
    check_xy(x, y.len())?;
    if x.rows() < 2 {
        return Err(FeatselError::TooFewSamples {
            needed: 2,
            got: x.rows(),
        });
    }
    let (z, constant) = standardize_columns(x);
    let active: Vec<usize> = (0..x.cols()).filter(|f| !constant.contains(f)).collect();
    let z = z.select_columns(&active);
    let yf = labels_as_f64(y);
    let mean = yf.iter().sum::<f64>() / yf.len() as f64;
    let yc: Vec<f64> = yf.iter().map(|v| v - mean).collect();
    let lambda = cfg
        .lambda
        .unwrap_or_else(|| cfg.lambda_ratio * lasso_lambda_max(&z, &yc));
    let mut scores = vec![0.0; x.cols()];
    let mut converged = true;
    if !active.is_empty() {
        let fit = lasso_fit(&z, &yc, lambda)?;
        converged = fit.converged;
        for (&f, b) in active.iter().zip(&fit.beta) {
            scores[f] = b.abs();
        }
    }
    let mut selected = super::top_k(&scores, cfg.k_select);
    selected.retain(|&f| scores[f] > 0.0);
    Ok(SelectionResult {
        method: SelectorKind::Lasso,
        scores,
        selected,
        std_errors: None,
        degenerate_features: constant,
        config: serde_json::json!({
            "lambda": lambda,
            "lambda_ratio": cfg.lambda_ratio,
            "k_select": cfg.k_select,
            "converged": converged,
        }),
    })
}
