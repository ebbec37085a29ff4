//! CART trees: a Gini classification tree and a squared-error regression
//! tree used as the GBDT weak learner.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values among the node's samples; a sample goes left when
//! `x[feature] <= threshold`. Among equally good splits the lower feature
//! index wins, then the lower threshold.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means `floor(sqrt(n_features))`.
    pub mtry: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            mtry: None,
        }
    }
}

impl TreeParams {
    /// Every feature at every split, no depth limit.
    pub fn exhaustive() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            mtry: Some(usize::MAX),
        }
    }

    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        let default = (n_features as f64).sqrt().floor() as usize;
        self.mtry.unwrap_or(default).clamp(1, n_features.max(1))
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.min_samples_split < 2 {
            return Err(LearnError::InvalidParams(format!(
                "min_samples_split must be >= 2, got {}",
                self.min_samples_split
            )));
        }
        if self.mtry == Some(0) {
            return Err(LearnError::InvalidParams("mtry must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: [f64; 2],
    },
    Leaf {
        counts: [f64; 2],
    },
}

impl Node {
    pub fn counts(&self) -> [f64; 2] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts } => *counts,
        }
    }
}

/// Binary classification tree. Class counts are sample-weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) n_features: usize,
    /// Weighted Gini decrease per feature, divided by the root weight.
    pub(crate) importances: Vec<f64>,
}

fn gini(c: [f64; 2]) -> f64 {
    let total = c[0] + c[1];
    if total <= 0.0 {
        return 0.0;
    }
    let p = c[1] / total;
    2.0 * p * (1.0 - p)
}

/// Threshold between two consecutive distinct sorted values, kept strictly
/// below the upper value.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

struct ClassSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_class_split(
    x: &Matrix,
    y: &[u8],
    w: &[f64],
    idx: &[usize],
    feature: usize,
    parent: [f64; 2],
    order: &mut Vec<usize>,
) -> Option<ClassSplit> {
    order.clear();
    order.extend_from_slice(idx);
    order.sort_unstable_by(|&a, &b| {
        x.get(a, feature)
            .total_cmp(&x.get(b, feature))
            .then(a.cmp(&b))
    });
    let total = parent[0] + parent[1];
    let parent_impurity = gini(parent);
    let mut left = [0.0; 2];
    let mut best: Option<ClassSplit> = None;
    for k in 0..order.len() - 1 {
        let i = order[k];
        left[y[i] as usize] += w[i];
        let (v, next) = (x.get(i, feature), x.get(order[k + 1], feature));
        if v == next {
            continue;
        }
        let right = [parent[0] - left[0], parent[1] - left[1]];
        let wl = left[0] + left[1];
        let wr = total - wl;
        let gain = parent_impurity - (wl / total) * gini(left) - (wr / total) * gini(right);
        if best.as_ref().is_none_or(|b| gain > b.gain) {
            best = Some(ClassSplit {
                feature,
                threshold: midpoint(v, next),
                gain,
            });
        }
    }
    best
}

impl DecisionTree {
    /// Grows a tree on the rows of `x` with positive weight.
    pub(crate) fn fit_weighted(
        x: &Matrix,
        y: &[u8],
        weights: &[f64],
        params: &TreeParams,
        rng: &mut Rng,
    ) -> Result<Self, LearnError> {
        params.validate()?;
        let n_features = x.cols();
        let mtry = params.resolved_mtry(n_features);
        let root_idx: Vec<usize> = (0..x.rows()).filter(|&i| weights[i] > 0.0).collect();
        if root_idx.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        let count = |idx: &[usize]| {
            idx.iter().fold([0.0; 2], |mut c, &i| {
                c[y[i] as usize] += weights[i];
                c
            })
        };
        let root_counts = count(&root_idx);
        let root_weight = root_counts[0] + root_counts[1];
        let mut nodes = vec![Node::Leaf {
            counts: root_counts,
        }];
        let mut importances = vec![0.0; n_features];
        let mut stack = vec![(0usize, root_idx, 0usize)];
        let mut features: Vec<usize> = (0..n_features).collect();
        let mut order = Vec::new();
        while let Some((node, idx, depth)) = stack.pop() {
            let counts = nodes[node].counts();
            let depth_ok = params.max_depth.is_none_or(|d| depth < d);
            if !depth_ok
                || idx.len() < params.min_samples_split
                || counts[0] <= 0.0
                || counts[1] <= 0.0
            {
                continue;
            }
            features.sort_unstable();
            features.shuffle(rng);
            let mut best: Option<ClassSplit> = None;
            for (tried, &f) in features.iter().enumerate() {
                // keep drawing past mtry only while no valid split has been found
                if tried >= mtry && best.is_some() {
                    break;
                }
                if let Some(s) = best_class_split(x, y, weights, &idx, f, counts, &mut order) {
                    let better = match &best {
                        None => true,
                        Some(b) => s.gain > b.gain || (s.gain == b.gain && s.feature < b.feature),
                    };
                    if better {
                        best = Some(s);
                    }
                }
            }
            let Some(split) = best else { continue };
            let (li, ri): (Vec<usize>, Vec<usize>) = idx
                .iter()
                .partition(|&&i| x.get(i, split.feature) <= split.threshold);
            let (lc, rc) = (count(&li), count(&ri));
            let weight = counts[0] + counts[1];
            importances[split.feature] +=
                (weight * gini(counts) - (lc[0] + lc[1]) * gini(lc) - (rc[0] + rc[1]) * gini(rc))
                    / root_weight;
            let left = nodes.len();
            nodes.push(Node::Leaf { counts: lc });
            nodes.push(Node::Leaf { counts: rc });
            nodes[node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right: left + 1,
                counts,
            };
            stack.push((left + 1, ri, depth + 1));
            stack.push((left, li, depth + 1));
        }
        for v in &mut importances {
            *v = v.max(0.0);
        }
        Ok(DecisionTree {
            nodes,
            n_features,
            importances,
        })
    }

    fn leaf(&self, x: &[f64]) -> [f64; 2] {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    k = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Majority class of the reached leaf; ties go to class 0.
    pub fn predict_label(&self, x: &[f64]) -> u8 {
        let c = self.leaf(x);
        (c[1] > c[0]) as u8
    }

    /// Weighted positive fraction in the reached leaf.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let c = self.leaf(x);
        c[1] / (c[0] + c[1])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], k: usize) -> usize {
            match &nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Raw (unnormalised) impurity decrease per feature.
    pub fn raw_importances(&self) -> &[f64] {
        &self.importances
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Squared-error regression tree whose leaves hold a Newton step
/// `sum g / sum h` of the samples they contain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<RegNode>,
    pub(crate) n_features: usize,
}

impl RegressionTree {
    /// Fits targets `g` (negative gradients) with hessians `h`.
    pub(crate) fn fit(
        x: &Matrix,
        g: &[f64],
        h: &[f64],
        max_depth: usize,
        min_samples_split: usize,
    ) -> Result<Self, LearnError> {
        if x.rows() == 0 {
            return Err(LearnError::EmptyDataset);
        }
        let leaf_value = |idx: &[usize]| {
            let sg: f64 = idx.iter().map(|&i| g[i]).sum();
            let sh: f64 = idx.iter().map(|&i| h[i]).sum();
            sg / sh.max(1e-12)
        };
        let all: Vec<usize> = (0..x.rows()).collect();
        let mut nodes = vec![RegNode::Leaf {
            value: leaf_value(&all),
        }];
        let mut stack = vec![(0usize, all, 0usize)];
        let mut order = Vec::new();
        while let Some((node, idx, depth)) = stack.pop() {
            if depth >= max_depth || idx.len() < min_samples_split.max(2) {
                continue;
            }
            let total: f64 = idx.iter().map(|&i| g[i]).sum();
            let n = idx.len() as f64;
            let base = total * total / n;
            let mut best: Option<(usize, f64, f64)> = None;
            for f in 0..x.cols() {
                order.clear();
                order.extend_from_slice(&idx);
                order
                    .sort_unstable_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
                let mut left_sum = 0.0;
                for k in 0..order.len() - 1 {
                    left_sum += g[order[k]];
                    let (v, next) = (x.get(order[k], f), x.get(order[k + 1], f));
                    if v == next {
                        continue;
                    }
                    let nl = (k + 1) as f64;
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / nl + right_sum * right_sum / (n - nl) - base;
                    if best.is_none_or(|b| gain > b.2) {
                        best = Some((f, midpoint(v, next), gain));
                    }
                }
            }
            let Some((feature, threshold, gain)) = best else {
                continue;
            };
            if gain <= 1e-15 * base.abs().max(1e-300) {
                continue;
            }
            let (li, ri): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
            let left = nodes.len();
            nodes.push(RegNode::Leaf {
                value: leaf_value(&li),
            });
            nodes.push(RegNode::Leaf {
                value: leaf_value(&ri),
            });
            nodes[node] = RegNode::Split {
                feature,
                threshold,
                left,
                right: left + 1,
            };
            stack.push((left + 1, ri, depth + 1));
            stack.push((left, li, depth + 1));
        }
        Ok(RegressionTree {
            nodes,
            n_features: x.cols(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn nodes(&self) -> &[RegNode] {
        &self.nodes
    }
}
