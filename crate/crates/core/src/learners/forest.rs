use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::{check_training_data, LearnError, Prediction};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Train each tree on a bootstrap resample of size N.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

/// Bagged ensemble of Gini trees. Tree `t` draws its bootstrap sample and
/// split features from the stream `child_seed(seed, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForest {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) params: ForestParams,
    pub(crate) seed: u64,
    pub(crate) n_features: usize,
    pub(crate) importances: Vec<f64>,
    /// No tree split anywhere; importances were set uniform.
    pub(crate) importance_degenerate: bool,
}

/// Mean of per-tree normalised impurity decreases, renormalised to sum 1.
/// Returns a uniform vector and `true` when no split exists.
pub(crate) fn aggregate_importances(trees: &[DecisionTree], n_features: usize) -> (Vec<f64>, bool) {
    let mut acc = vec![0.0; n_features];
    for t in trees {
        let total: f64 = t.importances.iter().sum();
        if total > 0.0 {
            for (a, v) in acc.iter_mut().zip(&t.importances) {
                *a += v / total;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        (acc.into_iter().map(|v| v / total).collect(), false)
    } else {
        (vec![1.0 / n_features.max(1) as f64; n_features], true)
    }
}

pub fn train_forest(
    x: &Matrix,
    y: &[u8],
    params: &ForestParams,
    seed: u64,
) -> Result<TrainedForest, LearnError> {
    check_training_data(x, y)?;
    params.tree.validate()?;
    if params.n_trees == 0 {
        return Err(LearnError::InvalidParams("n_trees must be >= 1".into()));
    }
    let n = x.rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::child_rng(seed, t as u64);
            let weights = if params.bootstrap {
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            DecisionTree::fit_weighted(x, y, &weights, &params.tree, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (importances, importance_degenerate) = aggregate_importances(&trees, x.cols());
    Ok(TrainedForest {
        trees,
        params: *params,
        seed,
        n_features: x.cols(),
        importances,
        importance_degenerate,
    })
}

impl TrainedForest {
    /// Majority vote; a tied vote predicts class 0. The score is the
    /// fraction of trees voting 1.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction, LearnError> {
        if x.len() != self.n_features {
            return Err(LearnError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict_label(x) == 1)
            .count();
        let n = self.trees.len();
        Ok(Prediction {
            label: (2 * votes > n) as u8,
            score: votes as f64 / n as f64,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean decrease in Gini impurity per feature, summing to 1.
    pub fn feature_importance(&self) -> &[f64] {
        &self.importances
    }

    /// True when the importances are a uniform placeholder because no tree split.
    pub fn importance_degenerate(&self) -> bool {
        self.importance_degenerate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn blobs(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut r = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = (i % 2) as u8;
            let shift = if c == 1 { 1.5 } else { -1.5 };
            rows.push(vec![
                shift + r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                3.0,
            ]);
            y.push(c);
        }
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn single_tree_without_bootstrap_equals_tree() {
        let (x, y) = blobs(60, 1);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            tree: TreeParams::default(),
        };
        let f = train_forest(&x, &y, &params, 9).unwrap();
        let mut rng = rng::child_rng(9, 0);
        let t = DecisionTree::fit_weighted(&x, &y, &[1.0; 60], &params.tree, &mut rng).unwrap();
        for i in 0..60 {
            assert_eq!(
                f.predict(x.row(i)).unwrap().label,
                t.predict_label(x.row(i))
            );
        }
    }

    #[test]
    fn importances_and_constant_feature() {
        let (x, y) = blobs(200, 2);
        let f = train_forest(&x, &y, &ForestParams::default(), 42).unwrap();
        let imp = f.feature_importance();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(imp[2], 0.0);
        assert!(imp[0] > imp[1]);
        assert!(!f.importance_degenerate());
        let acc = (0..200)
            .filter(|&i| f.predict(x.row(i)).unwrap().label == y[i])
            .count();
        assert_eq!(acc, 200);
    }

    #[test]
    fn dimension_mismatch() {
        let (x, y) = blobs(20, 3);
        let f = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 3,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        assert!(matches!(
            f.predict(&[1.0]),
            Err(LearnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (x, y) = blobs(150, 4);
        let a = train_forest(&x, &y, &ForestParams::default(), 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| train_forest(&x, &y, &ForestParams::default(), 42).unwrap());
        assert_eq!(a, b);
    }
}
