//! Binary classifiers: CART trees, random forest, AdaBoost, GBDT and a
//! linear SVM, plus stratified cross-validation and a text model format.

mod boost;
mod cv;
mod forest;
mod serial;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use boost::{
    train_adaboost, train_gbdt, AdaBoostParams, BoostKind, BoostModel, GbdtParams, WeakLearner,
};
pub use cv::{cross_validate, stratified_folds, CvResult};
pub use forest::{train_forest, ForestParams, TrainedForest};
pub use serial::{model_from_text, model_to_text, MODEL_HEADER};
pub use svm::{train_linear_svm, LinearSvmModel, SvmParams};
pub use tree::{DecisionTree, Node, RegNode, RegressionTree, TreeParams};

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label {0} is not binary (expected 0 or 1)")]
    LabelArityError(u8),
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("model parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub(crate) fn check_training_data(x: &Matrix, y: &[u8]) -> Result<(), LearnError> {
    if x.rows() == 0 || y.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(LearnError::LabelArityError(bad));
    }
    Ok(())
}

pub(crate) fn require_both_classes(y: &[u8]) -> Result<(), LearnError> {
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(LearnError::SingleClassInput);
    }
    Ok(())
}

/// Fits a single CART tree. The seed drives the per-split feature subsets.
pub fn train_tree(
    x: &Matrix,
    y: &[u8],
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree, LearnError> {
    check_training_data(x, y)?;
    params.validate()?;
    let mut rng = crate::rng::rng_from_seed(seed);
    DecisionTree::fit_weighted(x, y, &vec![1.0; x.rows()], params, &mut rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Gbdt,
    Rf,
    AdaBoost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Svm,
        ModelKind::Gbdt,
        ModelKind::Rf,
        ModelKind::AdaBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Rf => "rf",
            ModelKind::AdaBoost => "adaboost",
        }
    }

    pub fn default_spec(self) -> ModelSpec {
        match self {
            ModelKind::Svm => ModelSpec::Svm(SvmParams::default()),
            ModelKind::Gbdt => ModelSpec::Gbdt(GbdtParams::default()),
            ModelKind::Rf => ModelSpec::Rf(ForestParams::default()),
            ModelKind::AdaBoost => ModelSpec::AdaBoost(AdaBoostParams::default()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ModelKind::Svm),
            "gbdt" => Ok(ModelKind::Gbdt),
            "rf" | "forest" => Ok(ModelKind::Rf),
            "adaboost" => Ok(ModelKind::AdaBoost),
            other => Err(LearnError::InvalidParams(format!(
                "unknown model kind '{other}'"
            ))),
        }
    }
}

/// A model family together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Rf(ForestParams),
    AdaBoost(AdaBoostParams),
    Gbdt(GbdtParams),
    Svm(SvmParams),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Rf(_) => ModelKind::Rf,
            ModelSpec::AdaBoost(_) => ModelKind::AdaBoost,
            ModelSpec::Gbdt(_) => ModelKind::Gbdt,
            ModelSpec::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[u8], seed: u64) -> Result<Model, LearnError> {
        Ok(match self {
            ModelSpec::Rf(p) => Model::Forest(train_forest(x, y, p, seed)?),
            ModelSpec::AdaBoost(p) => Model::Boost(train_adaboost(x, y, p, seed)?),
            ModelSpec::Gbdt(p) => Model::Boost(train_gbdt(x, y, p, seed)?),
            ModelSpec::Svm(p) => Model::Svm(train_linear_svm(x, y, p, seed)?),
        })
    }
}

/// Any trained classifier. `Baseline` always predicts one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Forest(TrainedForest),
    Boost(BoostModel),
    Svm(LinearSvmModel),
    Baseline { label: u8, n_features: usize },
}

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Forest(f) => f.n_features,
            Model::Boost(b) => b.n_features,
            Model::Svm(s) => s.w.len(),
            Model::Baseline { n_features, .. } => *n_features,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        match self {
            Model::Forest(f) => f.predict(x),
            Model::Boost(b) => b.predict(x),
            Model::Svm(s) => s.predict(x),
            Model::Baseline { label, n_features } => {
                if x.len() != *n_features {
                    return Err(LearnError::DimensionMismatch {
                        expected: *n_features,
                        got: x.len(),
                    });
                }
                Ok(Prediction {
                    label: *label,
                    score: *label as f64,
                })
            }
        }
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<Prediction>, LearnError> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn predict_labels(&self, x: &Matrix) -> Result<Vec<u8>, LearnError> {
        (0..x.rows())
            .map(|i| self.predict(x.row(i)).map(|p| p.label))
            .collect()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Forest(_) => "rf",
            Model::Boost(b) => match b.kind {
                BoostKind::AdaBoost => "adaboost",
                BoostKind::Gbdt => "gbdt",
            },
            Model::Svm(_) => "svm",
            Model::Baseline { .. } => "baseline",
        }
    }

    /// Forest impurity importances, if this is a forest.
    pub fn feature_importance(&self) -> Option<&[f64]> {
        match self {
            Model::Forest(f) => Some(f.feature_importance()),
            _ => None,
        }
    }
}

/// Majority label of `y`, ties to 0.
pub fn majority_label(y: &[u8]) -> u8 {
    let pos = y.iter().filter(|&&v| v == 1).count();
    (2 * pos > y.len()) as u8
}
