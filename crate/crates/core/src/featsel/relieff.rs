use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{check_both_classes, check_xy, top_k, FeatselError, SelectionResult, SelectorKind};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliefConfig {
    pub k_neighbors: usize,
    /// Probes drawn without replacement; clamped to N.
    pub n_probes: usize,
    pub seed: u64,
    pub k_select: usize,
}

impl Default for ReliefConfig {
    fn default() -> Self {
        ReliefConfig {
            k_neighbors: 10,
            n_probes: 200,
            seed: 42,
            k_select: 4,
        }
    }
}

/// ReliefF for binary labels. Neighbours are found under Euclidean distance
/// on z-scored features (distance ties go to the lower row index); the
/// per-feature diff is `|x - x'| / range(f)`.
pub fn relieff_weights(
    x: &Matrix,
    y: &[u8],
    cfg: &ReliefConfig,
) -> Result<SelectionResult, FeatselError> {
    check_xy(x, y.len())?;
    check_both_classes(y)?;
    if cfg.k_neighbors == 0 || cfg.n_probes == 0 {
        return Err(FeatselError::InvalidParams(
            "k_neighbors and n_probes must be >= 1".into(),
        ));
    }
    let (n, d) = (x.rows(), x.cols());
    let mut z = x.clone();
    let mut range = vec![0.0; d];
    let mut degenerate = Vec::new();
    for f in 0..d {
        let col = x.column(f);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        range[f] = hi - lo;
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        if sd <= 0.0 {
            degenerate.push(f);
        }
        for (i, v) in col.iter().enumerate() {
            z.set(i, f, if sd > 0.0 { (v - mean) / sd } else { 0.0 });
        }
    }
    let m = cfg.n_probes.min(n);
    let mut probes: Vec<usize> = index::sample(&mut rng::rng_from_seed(cfg.seed), n, m).into_vec();
    probes.sort_unstable();
    let mut weights = vec![0.0; d];
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &p in &probes {
        dist.clear();
        for i in (0..n).filter(|&i| i != p) {
            let d2: f64 = z
                .row(i)
                .iter()
                .zip(z.row(p))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist.push((d2, i));
        }
        dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for same in [true, false] {
            let neighbors: Vec<usize> = dist
                .iter()
                .filter(|&&(_, i)| (y[i] == y[p]) == same)
                .take(cfg.k_neighbors)
                .map(|&(_, i)| i)
                .collect();
            if neighbors.is_empty() {
                continue;
            }
            let sign = if same { -1.0 } else { 1.0 };
            let scale = sign / (m * neighbors.len()) as f64;
            for f in (0..d).filter(|&f| range[f] > 0.0) {
                let diff: f64 = neighbors
                    .iter()
                    .map(|&i| (x.get(i, f) - x.get(p, f)).abs() / range[f])
                    .sum();
                weights[f] += scale * diff;
            }
        }
    }
    Ok(SelectionResult {
        method: SelectorKind::Relieff,
        selected: top_k(&weights, cfg.k_select),
        scores: weights,
        std_errors: None,
        degenerate_features: degenerate,
        config: serde_json::to_value(cfg).unwrap_or_default(),
    })
}
