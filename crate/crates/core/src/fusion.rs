//! Attention fusion of per-cell feature vectors.
//!
//! For a standardized feature vector `f` of length `n`, pairwise scores are
//! `e[i][j] = f[i] * W[i][j] * f[j]`, each feature's score is the row mean
//! `s[i] = mean_j e[i][j]`, and `alpha = softmax(s)`. Fusion then either
//! reweights every channel (`z[i] = n * alpha[i] * f[i]`, the default) or
//! collapses the vector to the single weighted sum `sum alpha[i] * f[i]`.
//!
//! `W` is learned jointly with a logistic head on the fused output by
//! full-batch gradient descent with backtracking.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error(
        "need at least 2 samples of each class, got {negatives} negative and {positives} positive"
    )]
    TooFewSamples { negatives: usize, positives: usize },
    #[error("loss became non-finite; learning rate too large")]
    NonFiniteLoss,
    #[error("invalid fuser: {0}")]
    Invalid(String),
    #[error("malformed fuser record: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// `z[i] = n * alpha[i] * f[i]`; keeps one output per feature.
    #[default]
    Reweight,
    /// `z = sum alpha[i] * f[i]`; a single output.
    Collapse,
}

impl FusionMode {
    pub fn name(self) -> &'static str {
        match self {
            FusionMode::Reweight => "reweight",
            FusionMode::Collapse => "collapse",
        }
    }

    pub fn output_dim(self, n_feat: usize) -> usize {
        match self {
            FusionMode::Reweight => n_feat,
            FusionMode::Collapse => 1,
        }
    }
}

impl FromStr for FusionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reweight" => Ok(FusionMode::Reweight),
            "collapse" => Ok(FusionMode::Collapse),
            _ => Err(format!("unknown fusion mode `{s}` (reweight|collapse)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionFuser {
    n_feat: usize,
    mode: FusionMode,
    /// Row-major `n_feat x n_feat`.
    w: Vec<f64>,
    theta: Vec<f64>,
    bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedSample {
    pub alpha: Vec<f64>,
    pub z: Vec<f64>,
}

/// Unnormalised softmax terms `exp(s[i] - max s)` and their sum.
fn score_exponents(f: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
    let n = f.len();
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            let row = &w[i * n..(i + 1) * n];
            row.iter()
                .zip(f)
                .map(|(wij, fj)| f[i] * wij * fj)
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total = exps.iter().sum();
    (exps, total)
}

/// Softmax of `scores`, shifted by the maximum before exponentiation.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Row-mean attention scores `s[i] = mean_j f[i] W[i][j] f[j]`.
pub fn attention_scores(f: &[f64], w: &[f64]) -> Result<Vec<f64>, FusionError> {
    let n = f.len();
    if w.len() != n * n {
        return Err(FusionError::DimensionMismatch {
            expected: n * n,
            got: w.len(),
        });
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| f[i] * w[i * n + j] * f[j]).sum::<f64>() / n as f64)
        .collect())
}

/// Attention weights `alpha = softmax(s)` for one feature vector.
pub fn attention_weights(f: &[f64], w: &[f64]) -> Result<Vec<f64>, FusionError> {
    Ok(softmax(&attention_scores(f, w)?))
}

fn fuse_with(f: &[f64], w: &[f64], mode: FusionMode) -> FusedSample {
    let n = f.len();
    let (exps, total) = score_exponents(f, w);
    let alpha: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let z = match mode {
        // n * e / total is exactly 1 for uniform scores, so W = 0 is an exact identity
        FusionMode::Reweight => f
            .iter()
            .zip(&exps)
            .map(|(fi, e)| fi * (n as f64 * e / total))
            .collect(),
        FusionMode::Collapse => vec![f.iter().zip(&alpha).map(|(fi, a)| fi * a).sum()],
    };
    FusedSample { alpha, z }
}

impl AttentionFuser {
    /// A fuser with `W = 0`, zero head weights and zero bias.
    pub fn identity(n_feat: usize, mode: FusionMode) -> Result<Self, FusionError> {
        if n_feat < 2 {
            return Err(FusionError::Invalid(format!(
                "need at least 2 features, got {n_feat}"
            )));
        }
        Ok(AttentionFuser {
            n_feat,
            mode,
            w: vec![0.0; n_feat * n_feat],
            theta: vec![0.0; mode.output_dim(n_feat)],
            bias: 0.0,
        })
    }

    pub fn with_weights(n_feat: usize, mode: FusionMode, w: Vec<f64>) -> Result<Self, FusionError> {
        let mut fuser = AttentionFuser::identity(n_feat, mode)?;
        if w.len() != n_feat * n_feat {
            return Err(FusionError::DimensionMismatch {
                expected: n_feat * n_feat,
                got: w.len(),
            });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(FusionError::Invalid("non-finite attention weight".into()));
        }
        fuser.w = w;
        Ok(fuser)
    }

    pub fn n_feat(&self) -> usize {
        self.n_feat
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn head(&self) -> (&[f64], f64) {
        (&self.theta, self.bias)
    }

    pub fn output_dim(&self) -> usize {
        self.mode.output_dim(self.n_feat)
    }

    pub fn fuse(&self, f: &[f64]) -> Result<FusedSample, FusionError> {
        if f.len() != self.n_feat {
            return Err(FusionError::DimensionMismatch {
                expected: self.n_feat,
                got: f.len(),
            });
        }
        Ok(fuse_with(f, &self.w, self.mode))
    }

    /// Fuses every row of `x`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix, FusionError> {
        if x.cols() != self.n_feat {
            return Err(FusionError::DimensionMismatch {
                expected: self.n_feat,
                got: x.cols(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..x.rows())
            .into_par_iter()
            .map(|i| fuse_with(x.row(i), &self.w, self.mode).z)
            .collect();
        let dim = self.output_dim();
        Ok(Matrix::new(
            rows.len(),
            dim,
            rows.into_iter().flatten().collect(),
        ))
    }

    /// Mean attention weight of each feature over the rows of `x`.
    pub fn mean_alpha(&self, x: &Matrix) -> Result<Vec<f64>, FusionError> {
        let mut acc = vec![0.0; self.n_feat];
        for row in x.iter_rows() {
            for (a, v) in acc.iter_mut().zip(self.fuse(row)?.alpha) {
                *a += v;
            }
        }
        let n = x.rows().max(1) as f64;
        Ok(acc.into_iter().map(|a| a / n).collect())
    }

    /// Flat text record: one `key value...` line per field, floats in
    /// shortest round-trip form.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::from("attention-fuser v1\n");
        let _ = writeln!(s, "n_feat {}", self.n_feat);
        let _ = writeln!(s, "mode {}", self.mode.name());
        let _ = writeln!(s, "w {}", join(&self.w));
        let _ = writeln!(s, "theta {}", join(&self.theta));
        let _ = writeln!(s, "bias {:?}", self.bias);
        s
    }

    pub fn from_text(text: &str) -> Result<Self, FusionError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("attention-fuser v1") {
            return Err(FusionError::Parse(
                "missing `attention-fuser v1` header".into(),
            ));
        }
        let mut field = |key: &str| -> Result<Vec<String>, FusionError> {
            let line = lines
                .next()
                .ok_or_else(|| FusionError::Parse(format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(FusionError::Parse(format!(
                    "expected `{key}`, found `{line}`"
                )));
            }
            Ok(parts.map(String::from).collect())
        };
        let floats = |v: Vec<String>| -> Result<Vec<f64>, FusionError> {
            v.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| FusionError::Parse(format!("bad number `{s}`")))
                })
                .collect()
        };
        let n_feat: usize = field("n_feat")?
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FusionError::Parse("bad n_feat".into()))?;
        let mode: FusionMode = field("mode")?
            .first()
            .ok_or_else(|| FusionError::Parse("missing mode".into()))?
            .parse()
            .map_err(FusionError::Parse)?;
        let w = floats(field("w")?)?;
        let theta = floats(field("theta")?)?;
        let bias = floats(field("bias")?)?;
        let mut fuser = AttentionFuser::with_weights(n_feat, mode, w)?;
        if theta.len() != fuser.output_dim() || bias.len() != 1 {
            return Err(FusionError::Parse(
                "head dimensions do not match the mode".into(),
            ));
        }
        fuser.theta = theta;
        fuser.bias = bias[0];
        Ok(fuser)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2_w: f64,
    /// Recorded for provenance; training starts from zeros and uses no randomness.
    pub seed: u64,
    pub mode: FusionMode,
}

impl Default for FusionTrainConfig {
    fn default() -> Self {
        FusionTrainConfig {
            epochs: 500,
            lr: 0.1,
            l2_w: 1e-3,
            seed: 42,
            mode: FusionMode::Reweight,
        }
    }
}

/// Trainable parameters packed as `W (n*n) | theta (out) | bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateParams {
    pub n_feat: usize,
    pub mode: FusionMode,
    pub values: Vec<f64>,
}

impl SurrogateParams {
    pub fn zeros(n_feat: usize, mode: FusionMode) -> Self {
        SurrogateParams {
            n_feat,
            mode,
            values: vec![0.0; n_feat * n_feat + mode.output_dim(n_feat) + 1],
        }
    }

    fn split(&self) -> (&[f64], &[f64], f64) {
        let nn = self.n_feat * self.n_feat;
        let out = self.mode.output_dim(self.n_feat);
        (
            &self.values[..nn],
            &self.values[nn..nn + out],
            self.values[nn + out],
        )
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy from a logit, `log(1 + e^u) - y u`, computed stably.
fn bce_from_logit(u: f64, y: f64) -> f64 {
    u.max(0.0) - y * u + (-u.abs()).exp().ln_1p()
}

/// Surrogate loss and its gradient with respect to every packed parameter:
/// `mean BCE(sigmoid(theta . z + b), y) + l2_w * ||W||^2`.
pub fn surrogate_loss_and_grad(
    params: &SurrogateParams,
    x: &Matrix,
    y: &[u8],
    l2_w: f64,
) -> (f64, Vec<f64>) {
    let n = params.n_feat;
    let (w, theta, bias) = params.split();
    let inv_n = 1.0 / x.rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.values.len()];
    let nn = n * n;
    for (row, &label) in x.iter_rows().zip(y) {
        let target = label as f64;
        let fused = fuse_with(row, w, params.mode);
        let u: f64 = theta.iter().zip(&fused.z).map(|(t, z)| t * z).sum::<f64>() + bias;
        loss += bce_from_logit(u, target) * inv_n;
        let delta = (sigmoid(u) - target) * inv_n;
        for (g, z) in grad[nn..nn + theta.len()].iter_mut().zip(&fused.z) {
            *g += delta * z;
        }
        grad[nn + theta.len()] += delta;
        let g_alpha: Vec<f64> = match params.mode {
            FusionMode::Reweight => (0..n)
                .map(|i| delta * theta[i] * n as f64 * row[i])
                .collect(),
            FusionMode::Collapse => (0..n).map(|i| delta * theta[0] * row[i]).collect(),
        };
        let dot: f64 = fused.alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
        for i in 0..n {
            let g_score = fused.alpha[i] * (g_alpha[i] - dot);
            for j in 0..n {
                grad[i * n + j] += g_score * row[i] * row[j] / n as f64;
            }
        }
    }
    for (g, wij) in grad[..nn].iter_mut().zip(w) {
        *g += 2.0 * l2_w * wij;
        loss += l2_w * wij * wij;
    }
    (loss, grad)
}

/// Result of [`train_fuser`]: the fuser plus the accepted-step loss trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTraining {
    pub fuser: AttentionFuser,
    /// Loss before training followed by the loss after each accepted step.
    pub losses: Vec<f64>,
    pub final_lr: f64,
}

const MAX_HALVINGS: usize = 40;

/// Fits `W` and the logistic head on standardized rows `x` with labels `y`.
///
/// Starts from `W = 0`, `theta = 0`, `b = logit(base rate)`. A step that
/// raises the loss is retried with half the learning rate; the halved rate
/// is kept for later epochs. Training stops early once no step size in the
/// backtracking budget lowers the loss.
pub fn train_fuser(
    x: &Matrix,
    y: &[u8],
    config: &FusionTrainConfig,
) -> Result<FusionTraining, FusionError> {
    let n = x.cols();
    if x.rows() != y.len() {
        return Err(FusionError::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    let negatives = y.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FusionError::SingleClassInput);
    }
    if positives < 2 || negatives < 2 {
        return Err(FusionError::TooFewSamples {
            negatives,
            positives,
        });
    }
    let mut fuser = AttentionFuser::identity(n, config.mode)?;
    let mut params = SurrogateParams::zeros(n, config.mode);
    let rate = positives as f64 / y.len() as f64;
    let last = params.values.len() - 1;
    params.values[last] = (rate / (1.0 - rate)).ln();

    let (mut loss, mut grad) = surrogate_loss_and_grad(&params, x, y, config.l2_w);
    if !loss.is_finite() {
        return Err(FusionError::NonFiniteLoss);
    }
    let mut losses = vec![loss];
    let mut lr = config.lr;
    'epochs: for _ in 0..config.epochs {
        let mut step = lr;
        for _ in 0..MAX_HALVINGS {
            let candidate = SurrogateParams {
                values: params
                    .values
                    .iter()
                    .zip(&grad)
                    .map(|(p, g)| p - step * g)
                    .collect(),
                ..params.clone()
            };
            let (next_loss, next_grad) = surrogate_loss_and_grad(&candidate, x, y, config.l2_w);
            if next_loss.is_finite() && next_loss <= loss {
                params = candidate;
                loss = next_loss;
                grad = next_grad;
                losses.push(loss);
                lr = step;
                continue 'epochs;
            }
            step *= 0.5;
        }
        break;
    }
    if !loss.is_finite() {
        return Err(FusionError::NonFiniteLoss);
    }
    let (w, theta, bias) = params.split();
    fuser.w = w.to_vec();
    fuser.theta = theta.to_vec();
    fuser.bias = bias;
    Ok(FusionTraining {
        fuser,
        losses,
        final_lr: lr,
    })
}
