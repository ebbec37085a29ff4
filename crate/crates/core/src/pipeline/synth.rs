use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{label_by_quantile, make_dataset, LabeledDataset, PipelineError, SplitConfig};
use crate::grid::{synth_field, Bump, GravityGrid, GridError, GridSpec, SynthConfig};
use crate::matrix::Matrix;
use crate::rng;

/// Tabular stand-in for a feature cube: a few informative columns drive a
/// latent score, the rest are independent noise. Rows whose latent score
/// falls at or below its `quantile` are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularSynth {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub quantile: f64,
    /// Standard deviation of Gaussian noise added to the latent score.
    pub latent_noise: f64,
}

impl Default for TabularSynth {
    fn default() -> Self {
        TabularSynth {
            n_samples: 600,
            n_informative: 3,
            n_noise: 3,
            quantile: 0.1,
            latent_noise: 0.3,
        }
    }
}

/// Raw features and labels for one region. Informative columns come first.
pub fn synthetic_region(cfg: &TabularSynth, seed: u64) -> Result<(Matrix, Vec<u8>), PipelineError> {
    let d = cfg.n_informative + cfg.n_noise;
    if cfg.n_informative == 0 || cfg.n_samples < 4 {
        return Err(PipelineError::Config(
            "need >= 1 informative feature and >= 4 samples".into(),
        ));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut r = rng::child_rng(seed, 0);
    let mut data = Vec::with_capacity(cfg.n_samples * d);
    let mut latent = Vec::with_capacity(cfg.n_samples);
    for _ in 0..cfg.n_samples {
        let row: Vec<f64> = (0..d).map(|_| normal.sample(&mut r)).collect();
        let mut s = cfg.latent_noise * normal.sample(&mut r);
        for (j, v) in row[..cfg.n_informative].iter().enumerate() {
            // alternate a linear and a curved response
            s += if j % 2 == 0 { *v } else { 0.6 * v * v.abs() };
        }
        latent.push(s);
        data.extend(row);
    }
    let labels = label_by_quantile(&latent, cfg.quantile)?.labels;
    Ok((Matrix::new(cfg.n_samples, d, data), labels))
}

/// `count` regions from seeds `child_seed(seed, r)`, each split and scaled
/// with `split` (the split seed is shared).
pub fn synthetic_regions(
    cfg: &TabularSynth,
    count: usize,
    seed: u64,
    split: &SplitConfig,
) -> Result<Vec<(String, LabeledDataset)>, PipelineError> {
    let names: Vec<String> = (0..cfg.n_informative)
        .map(|j| format!("signal{j}"))
        .chain((0..cfg.n_noise).map(|j| format!("noise{j}")))
        .collect();
    (0..count)
        .map(|r| {
            let (x, y) = synthetic_region(cfg, rng::child_seed(seed, r as u64))?;
            let coords = (0..x.rows()).map(|i| (i as f64, 0.0)).collect();
            let ds = make_dataset(&x, &y, coords, names.clone(), split)?;
            Ok((format!("region{:02}", r + 1), ds))
        })
        .collect()
}

/// Smooth positive background with one deep negative bump (the pocket).
/// Returns the grid and the pocket bump.
pub fn planted_pocket_grid(spec: GridSpec, seed: u64) -> Result<(GravityGrid, Bump), GridError> {
    let mut cfg = SynthConfig::random(spec, seed, 0.2);
    for b in &mut cfg.bumps {
        b.amplitude = b.amplitude.abs();
    }
    let extent = ((spec.n_lon - 1) as f64 * spec.dlon).min((spec.n_lat - 1) as f64 * spec.dlat);
    let pocket = Bump {
        lon: spec.lon0 + 0.3 * (spec.n_lon - 1) as f64 * spec.dlon,
        lat: spec.lat0 + 0.6 * (spec.n_lat - 1) as f64 * spec.dlat,
        amplitude: -80.0,
        width: 0.08 * extent,
    };
    cfg.bumps.push(pocket);
    Ok((synth_field(&cfg)?, pocket))
}
