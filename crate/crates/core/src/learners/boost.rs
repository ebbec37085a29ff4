//! Discrete AdaBoost on decision stumps and logistic gradient boosting on
//! shallow regression trees.

use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, RegressionTree, TreeParams};
use super::{check_training_data, require_both_classes, LearnError, Prediction};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostKind {
    AdaBoost,
    Gbdt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeakLearner {
    Stump(DecisionTree),
    Regression(RegressionTree),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub(crate) kind: BoostKind,
    /// `(learner, weight)`: the AdaBoost vote weight, or the GBDT shrinkage.
    pub(crate) stages: Vec<(WeakLearner, f64)>,
    /// Initial additive score (GBDT log-odds of the base rate; 0 for AdaBoost).
    pub(crate) init: f64,
    pub(crate) n_features: usize,
    /// Training loss after each stage: weighted error (AdaBoost) or mean
    /// log-loss (GBDT, index 0 is the constant model).
    pub(crate) train_loss: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { n_rounds: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub lr: f64,
    pub max_depth: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 100,
            lr: 0.1,
            max_depth: 3,
        }
    }
}

const ERR_FLOOR: f64 = 1e-10;

pub fn train_adaboost(
    x: &Matrix,
    y: &[u8],
    params: &AdaBoostParams,
    seed: u64,
) -> Result<BoostModel, LearnError> {
    check_training_data(x, y)?;
    require_both_classes(y)?;
    if params.n_rounds == 0 {
        return Err(LearnError::InvalidParams("n_rounds must be >= 1".into()));
    }
    let n = x.rows();
    let mut w = vec![1.0 / n as f64; n];
    let stump_params = TreeParams {
        max_depth: Some(1),
        min_samples_split: 2,
        mtry: Some(usize::MAX),
    };
    let mut stages = Vec::new();
    let mut errors = Vec::new();
    for round in 0..params.n_rounds {
        // stumps see every feature, so the stream only pins the feature visit order
        let mut rng = rng::child_rng(seed, round as u64);
        let stump = DecisionTree::fit_weighted(x, y, &w, &stump_params, &mut rng)?;
        let pred: Vec<u8> = (0..n).map(|i| stump.predict_label(x.row(i))).collect();
        let total: f64 = w.iter().sum();
        let err = pred
            .iter()
            .zip(y)
            .zip(&w)
            .filter(|((p, t), _)| p != t)
            .map(|(_, wi)| wi)
            .sum::<f64>()
            / total;
        errors.push(err);
        if err >= 0.5 {
            stages.push((WeakLearner::Stump(stump), 0.0));
            break;
        }
        let clamped = err.clamp(ERR_FLOOR, 1.0 - ERR_FLOOR);
        let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
        stages.push((WeakLearner::Stump(stump), alpha));
        if err <= ERR_FLOOR {
            break;
        }
        for i in 0..n {
            let agree = if pred[i] == y[i] { 1.0 } else { -1.0 };
            w[i] *= (-alpha * agree).exp();
        }
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
    }
    Ok(BoostModel {
        kind: BoostKind::AdaBoost,
        stages,
        init: 0.0,
        n_features: x.cols(),
        train_loss: errors,
    })
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn log_loss(scores: &[f64], y: &[u8]) -> f64 {
    scores
        .iter()
        .zip(y)
        .map(|(&u, &t)| u.max(0.0) - t as f64 * u + (-u.abs()).exp().ln_1p())
        .sum::<f64>()
        / y.len() as f64
}

/// `seed` is accepted for interface symmetry; rounds use every row and
/// feature, so training is deterministic without it.
pub fn train_gbdt(
    x: &Matrix,
    y: &[u8],
    params: &GbdtParams,
    _seed: u64,
) -> Result<BoostModel, LearnError> {
    check_training_data(x, y)?;
    require_both_classes(y)?;
    if !(params.lr >= 0.0 && params.lr.is_finite()) {
        return Err(LearnError::InvalidParams(format!(
            "learning rate {} must be >= 0",
            params.lr
        )));
    }
    let n = x.rows();
    let rate = (y.iter().filter(|&&v| v == 1).count() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let init = (rate / (1.0 - rate)).ln();
    let mut scores = vec![init; n];
    let mut losses = vec![log_loss(&scores, y)];
    let mut stages = Vec::new();
    for _ in 0..params.n_rounds {
        if params.lr == 0.0 {
            break;
        }
        let p: Vec<f64> = scores.iter().map(|&u| sigmoid(u)).collect();
        let g: Vec<f64> = p.iter().zip(y).map(|(pi, &t)| t as f64 - pi).collect();
        let h: Vec<f64> = p.iter().map(|pi| pi * (1.0 - pi)).collect();
        let tree = RegressionTree::fit(x, &g, &h, params.max_depth, 2)?;
        for (i, s) in scores.iter_mut().enumerate() {
            *s += params.lr * tree.predict(x.row(i));
        }
        losses.push(log_loss(&scores, y));
        stages.push((WeakLearner::Regression(tree), params.lr));
    }
    Ok(BoostModel {
        kind: BoostKind::Gbdt,
        stages,
        init,
        n_features: x.cols(),
        train_loss: losses,
    })
}

impl BoostModel {
    /// Additive score: `sum alpha_t * (+1|-1)` for AdaBoost, the log-odds for GBDT.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut s = self.init;
        for (learner, weight) in &self.stages {
            s += match learner {
                WeakLearner::Stump(t) => weight * if t.predict_label(x) == 1 { 1.0 } else { -1.0 },
                WeakLearner::Regression(t) => weight * t.predict(x),
            };
        }
        s
    }

    /// Label 1 when the additive score is strictly positive. The score is
    /// the AdaBoost margin or the GBDT probability.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        if x.len() != self.n_features {
            return Err(LearnError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let d = self.decision(x);
        let score = match self.kind {
            BoostKind::AdaBoost => d,
            BoostKind::Gbdt => sigmoid(d),
        };
        Ok(Prediction {
            label: (d > 0.0) as u8,
            score,
        })
    }

    pub fn kind(&self) -> BoostKind {
        self.kind
    }

    pub fn stages(&self) -> &[(WeakLearner, f64)] {
        &self.stages
    }

    pub fn init(&self) -> f64 {
        self.init
    }

    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(&(0..10).map(|i| [i as f64]).collect::<Vec<_>>());
        (x, (0..10).map(|i| (i >= 6) as u8).collect())
    }

    #[test]
    fn adaboost_separable_in_one_round() {
        let (x, y) = line();
        let m = train_adaboost(&x, &y, &AdaBoostParams { n_rounds: 20 }, 1).unwrap();
        assert_eq!(m.stages.len(), 1);
        for i in 0..10 {
            assert_eq!(m.predict(x.row(i)).unwrap().label, y[i]);
        }
    }

    #[test]
    fn adaboost_half_error_stops() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]);
        let m = train_adaboost(&x, &[0, 0, 1, 1], &AdaBoostParams { n_rounds: 10 }, 1).unwrap();
        assert_eq!(m.stages.len(), 1);
        assert_eq!(m.stages[0].1, 0.0);
        assert_eq!(m.train_loss, vec![0.5]);
    }

    #[test]
    fn adaboost_improves_on_hard_data() {
        let rows: Vec<[f64; 2]> = (0..80)
            .map(|i| [((i * 13) % 17) as f64, ((i * 7) % 19) as f64])
            .collect();
        let y: Vec<u8> = rows
            .iter()
            .map(|r| (r[0] > 8.0 && r[1] > 6.0) as u8)
            .collect();
        let x = Matrix::from_rows(&rows);
        let a = train_adaboost(&x, &y, &AdaBoostParams { n_rounds: 30 }, 3).unwrap();
        let b = train_adaboost(&x, &y, &AdaBoostParams { n_rounds: 30 }, 3).unwrap();
        assert_eq!(a, b);
        let acc = (0..80)
            .filter(|&i| a.predict(x.row(i)).unwrap().label == y[i])
            .count();
        assert!(acc >= 76, "{acc}");
    }

    #[test]
    fn gbdt_loss_non_increasing() {
        let rows: Vec<[f64; 2]> = (0..120)
            .map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let y: Vec<u8> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| ((r[0] * r[1] > 0.1) ^ (i % 17 == 0)) as u8)
            .collect();
        let x = Matrix::from_rows(&rows);
        let m = train_gbdt(&x, &y, &GbdtParams::default(), 0).unwrap();
        assert!(
            m.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "{:?}",
            m.train_loss
        );
        assert!(m.train_loss.last().unwrap() < &(m.train_loss[0] * 0.5));
        assert_eq!(m, train_gbdt(&x, &y, &GbdtParams::default(), 0).unwrap());
    }

    #[test]
    fn gbdt_zero_lr_predicts_base_rate() {
        let (x, y) = line();
        let m = train_gbdt(
            &x,
            &y,
            &GbdtParams {
                lr: 0.0,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        for i in 0..10 {
            let p = m.predict(x.row(i)).unwrap();
            assert!((p.score - 0.4).abs() < 1e-12);
            assert_eq!(p.label, 0);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = line();
        assert_eq!(
            train_adaboost(&x, &[1; 10], &AdaBoostParams::default(), 0),
            Err(LearnError::SingleClassInput)
        );
        assert_eq!(
            train_gbdt(&x, &[0; 10], &GbdtParams::default(), 0),
            Err(LearnError::SingleClassInput)
        );
    }
}
