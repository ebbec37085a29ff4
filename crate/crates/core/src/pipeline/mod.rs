//! Quantile labeling, dataset construction, end-to-end calibration and the
//! model/selector comparison harness.

mod calibrate;
mod compare;
mod synth;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use calibrate::{
    grid_dataset, run_calibration, CalibrationConfig, CalibrationRun, CvConfig, MapCell,
};
pub use compare::{
    compare_datasets, format_percent, CellResult, CompareConfig, ComparisonTable, FusionVariant,
    SelectionOutcome,
};
pub use synth::{planted_pocket_grid, synthetic_region, synthetic_regions, TabularSynth};

use crate::featsel::FeatselError;
use crate::features::FeatureError;
use crate::fusion::FusionError;
use crate::learners::LearnError;
use crate::matrix::Matrix;
use crate::metrics::MetricsError;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("quantile {0} must lie strictly between 0 and 1")]
    InvalidQuantile(f64),
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("quantile labeling is degenerate: all {n} labels are {label} (threshold {threshold})")]
    DegenerateLabels { n: usize, label: u8, threshold: f64 },
    #[error("labels contain a single class")]
    SingleClassInput,
    #[error("too few samples of class {class}: need {needed}, got {got}")]
    TooFewSamples {
        class: u8,
        needed: usize,
        got: usize,
    },
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("empty input")]
    Empty,
    #[error("features stage: {0}")]
    Features(#[from] FeatureError),
    #[error("fusion stage: {0}")]
    Fusion(#[from] FusionError),
    #[error("training stage: {0}")]
    Learn(#[from] LearnError),
    #[error("evaluation stage: {0}")]
    Metrics(#[from] MetricsError),
    #[error("selection stage: {0}")]
    Featsel(#[from] FeatselError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Threshold and labels from [`label_by_quantile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileLabels {
    pub q: f64,
    pub threshold: f64,
    pub labels: Vec<u8>,
    pub n_positive: usize,
}

/// The `q`-quantile under linear interpolation between order statistics at
/// 0-based rank `(N-1)q`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, PipelineError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(PipelineError::InvalidQuantile(q));
    }
    if values.is_empty() {
        return Err(PipelineError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Labels 1 where `value <= quantile(values, q)`.
pub fn label_by_quantile(values: &[f64], q: f64) -> Result<QuantileLabels, PipelineError> {
    let threshold = quantile(values, q)?;
    let labels: Vec<u8> = values.iter().map(|&v| (v <= threshold) as u8).collect();
    let n_positive = labels.iter().filter(|&&l| l == 1).count();
    if n_positive == 0 || n_positive == labels.len() {
        return Err(PipelineError::DegenerateLabels {
            n: labels.len(),
            label: (n_positive > 0) as u8,
            threshold,
        });
    }
    Ok(QuantileLabels {
        q,
        threshold,
        labels,
        n_positive,
    })
}

/// Per-feature population mean and standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix, rows: &[usize]) -> Result<Self, PipelineError> {
        if rows.is_empty() {
            return Err(PipelineError::Empty);
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; x.cols()];
        let mut std = vec![0.0; x.cols()];
        for f in 0..x.cols() {
            let m = rows.iter().map(|&i| x.get(i, f)).sum::<f64>() / n;
            let var = rows
                .iter()
                .map(|&i| (x.get(i, f) - m) * (x.get(i, f) - m))
                .sum::<f64>()
                / n;
            mean[f] = m;
            std[f] = var.sqrt();
        }
        Ok(Scaler { mean, std })
    }

    /// Features with zero training variance; they transform to 0.
    pub fn zero_variance(&self) -> Vec<usize> {
        (0..self.std.len())
            .filter(|&f| self.std[f] <= 0.0)
            .collect()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(f, v)| {
                if self.std[f] > 0.0 {
                    (v - self.mean[f]) / self.std[f]
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let data = x.iter_rows().flat_map(|r| self.transform_row(r)).collect();
        Matrix::new(x.rows(), x.cols(), data)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "scaler v1\nmean {}\nstd {}\n",
            join(&self.mean),
            join(&self.std)
        )
    }

    pub fn from_text(text: &str) -> Result<Self, PipelineError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("scaler v1") {
            return Err(PipelineError::Config(
                "scaler record must start with 'scaler v1'".into(),
            ));
        }
        let mut field = |tag: &str| -> Result<Vec<f64>, PipelineError> {
            let line = lines
                .next()
                .ok_or_else(|| PipelineError::Config(format!("scaler missing '{tag}'")))?;
            let mut toks = line.split_whitespace();
            if toks.next() != Some(tag) {
                return Err(PipelineError::Config(format!(
                    "scaler expected '{tag}' line"
                )));
            }
            toks.map(|t| {
                t.parse()
                    .map_err(|_| PipelineError::Config(format!("bad scaler value '{t}'")))
            })
            .collect()
        };
        let mean = field("mean")?;
        let std = field("std")?;
        if mean.len() != std.len() {
            return Err(PipelineError::Config(
                "scaler mean and std lengths differ".into(),
            ));
        }
        Ok(Scaler { mean, std })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.25,
            stratified: true,
            seed: 42,
        }
    }
}

/// Train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded split. Under stratification each class `c` with `n_c` rows puts
/// `clamp(round(n_c * f), 1, n_c - 1)` rows in the test set, so every class
/// appears on both sides; this needs at least 2 rows per class.
pub fn split_indices(y: &[u8], cfg: &SplitConfig) -> Result<Split, PipelineError> {
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(PipelineError::InvalidFraction(cfg.test_fraction));
    }
    let counts = [
        y.iter().filter(|&&v| v == 0).count(),
        y.iter().filter(|&&v| v == 1).count(),
    ];
    if counts[0] == 0 || counts[1] == 0 {
        return Err(PipelineError::SingleClassInput);
    }
    let mut test = Vec::new();
    let mut train = Vec::new();
    let take = |n: usize| ((n as f64 * cfg.test_fraction).round() as usize).clamp(1, n - 1);
    if cfg.stratified {
        for class in 0..=1u8 {
            let n = counts[class as usize];
            if n < 2 {
                return Err(PipelineError::TooFewSamples {
                    class,
                    needed: 2,
                    got: n,
                });
            }
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            idx.shuffle(&mut rng::child_rng(cfg.seed, class as u64));
            let k = take(n);
            test.extend_from_slice(&idx[..k]);
            train.extend_from_slice(&idx[k..]);
        }
    } else {
        if y.len() < 2 {
            return Err(PipelineError::TooFewSamples {
                class: 0,
                needed: 2,
                got: y.len(),
            });
        }
        let mut idx: Vec<usize> = (0..y.len()).collect();
        idx.shuffle(&mut rng::rng_from_seed(cfg.seed));
        let k = take(y.len());
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

/// Scaled features for every row plus the split they were scaled under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    /// All rows, z-scored with the training-row scaler.
    pub x: Matrix,
    pub y: Vec<u8>,
    pub coords: Vec<(f64, f64)>,
    pub split: Split,
    pub scaler: Scaler,
    pub standardized: bool,
    pub zero_variance: Vec<usize>,
    pub feature_names: Vec<String>,
}

impl LabeledDataset {
    pub fn train_x(&self) -> Matrix {
        self.x.select_rows(&self.split.train)
    }

    pub fn test_x(&self) -> Matrix {
        self.x.select_rows(&self.split.test)
    }

    pub fn train_y(&self) -> Vec<u8> {
        self.split.train.iter().map(|&i| self.y[i]).collect()
    }

    pub fn test_y(&self) -> Vec<u8> {
        self.split.test.iter().map(|&i| self.y[i]).collect()
    }
}

/// Splits, fits the scaler on training rows only and scales every row.
pub fn make_dataset(
    raw: &Matrix,
    labels: &[u8],
    coords: Vec<(f64, f64)>,
    feature_names: Vec<String>,
    cfg: &SplitConfig,
) -> Result<LabeledDataset, PipelineError> {
    if raw.rows() != labels.len() || coords.len() != labels.len() {
        return Err(PipelineError::LengthMismatch {
            rows: raw.rows(),
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(LearnError::LabelArityError(bad).into());
    }
    let split = split_indices(labels, cfg)?;
    let scaler = Scaler::fit(raw, &split.train)?;
    Ok(LabeledDataset {
        x: scaler.transform(raw),
        y: labels.to_vec(),
        coords,
        zero_variance: scaler.zero_variance(),
        scaler,
        split,
        standardized: true,
        feature_names,
    })
}
