use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{
    label_by_quantile, make_dataset, LabeledDataset, PipelineError, QuantileLabels, Scaler,
    SplitConfig,
};
use crate::features::{extract_features, WindowSpec, FEATURE_NAMES};
use crate::fusion::{train_fuser, AttentionFuser, FusionTrainConfig};
use crate::grid::GravityGrid;
use crate::learners::{cross_validate, CvResult, Model, ModelSpec};
use crate::matrix::Matrix;
use crate::metrics::{evaluate, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k_folds: usize,
    pub grid: Vec<ModelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub window: WindowSpec,
    pub quantile: f64,
    pub split: SplitConfig,
    /// `None` trains on the scaled features directly.
    pub fusion: Option<FusionTrainConfig>,
    pub model: ModelSpec,
    pub model_seed: u64,
    /// When set, the grid is searched on the training rows and the winner
    /// replaces `model`.
    pub cv: Option<CvConfig>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            window: WindowSpec::default(),
            quantile: 0.05,
            split: SplitConfig::default(),
            fusion: None,
            model: ModelSpec::Rf(Default::default()),
            model_seed: 42,
            cv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub lon: f64,
    pub lat: f64,
    pub label: u8,
    pub score: f64,
    pub truth: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRun {
    pub labels: QuantileLabels,
    pub scaler: Scaler,
    pub zero_variance: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub fuser: Option<AttentionFuser>,
    pub fusion_losses: Option<Vec<f64>>,
    pub mean_alpha: Option<Vec<f64>>,
    pub model: Model,
    pub cv: Option<CvResult>,
    pub report: EvalReport,
    pub feature_importance: Option<Vec<f64>>,
    pub map: Vec<MapCell>,
}

impl CalibrationRun {
    pub fn write_map_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lon,lat,label,score,truth")?;
        for c in &self.map {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.lon, c.lat, c.label, c.score, c.truth
            )?;
        }
        Ok(())
    }
}

/// Trained model plus its held-out evaluation on one dataset.
pub(crate) struct Fitted {
    pub fuser: Option<AttentionFuser>,
    pub fusion_losses: Option<Vec<f64>>,
    pub model: Model,
    pub cv: Option<CvResult>,
    pub report: EvalReport,
    /// Model input for every dataset row (fused when a fuser is present).
    pub inputs: Matrix,
}

/// Optional fusion (trained on training rows), optional CV, training and
/// test-split evaluation.
pub(crate) fn fit_dataset(
    ds: &LabeledDataset,
    fusion: Option<&FusionTrainConfig>,
    model: &ModelSpec,
    cv: Option<&CvConfig>,
    seed: u64,
) -> Result<Fitted, PipelineError> {
    let y_train = ds.train_y();
    let (fuser, fusion_losses, inputs) = match fusion {
        Some(fc) => {
            let t = train_fuser(&ds.train_x(), &y_train, fc)?;
            let inputs = t.fuser.transform(&ds.x)?;
            (Some(t.fuser), Some(t.losses), inputs)
        }
        None => (None, None, ds.x.clone()),
    };
    let x_train = inputs.select_rows(&ds.split.train);
    let (spec, cv_result) = match cv {
        Some(c) => {
            let r = cross_validate(&x_train, &y_train, &c.grid, c.k_folds, seed)?;
            (r.best_spec, Some(r))
        }
        None => (*model, None),
    };
    let fitted = spec.fit(&x_train, &y_train, seed)?;
    let pred = fitted.predict_labels(&inputs.select_rows(&ds.split.test))?;
    let report = evaluate(&pred, &ds.test_y())?;
    Ok(Fitted {
        fuser,
        fusion_losses,
        model: fitted,
        cv: cv_result,
        report,
        inputs,
    })
}

/// Window features of every cell labeled by the value quantile, split and
/// scaled.
pub fn grid_dataset(
    grid: &GravityGrid,
    window: WindowSpec,
    quantile: f64,
    split: &SplitConfig,
) -> Result<(LabeledDataset, QuantileLabels), PipelineError> {
    let cube = extract_features(grid, window)?;
    let labels = label_by_quantile(grid.values(), quantile)?;
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let ds = make_dataset(
        &cube.to_matrix(),
        &labels.labels,
        cube.coords(),
        names,
        split,
    )?;
    Ok((ds, labels))
}

/// Features, quantile labels, split and scaling, optional fusion and CV,
/// training, evaluation and a per-cell prediction map.
pub fn run_calibration(
    grid: &GravityGrid,
    cfg: &CalibrationConfig,
) -> Result<CalibrationRun, PipelineError> {
    let (ds, labels) = grid_dataset(grid, cfg.window, cfg.quantile, &cfg.split)?;
    let fit = fit_dataset(
        &ds,
        cfg.fusion.as_ref(),
        &cfg.model,
        cfg.cv.as_ref(),
        cfg.model_seed,
    )?;
    let preds = fit.model.predict_matrix(&fit.inputs)?;
    let map = preds
        .iter()
        .zip(&ds.coords)
        .zip(&ds.y)
        .map(|((p, &(lon, lat)), &truth)| MapCell {
            lon,
            lat,
            label: p.label,
            score: p.score,
            truth,
        })
        .collect();
    let mean_alpha = match &fit.fuser {
        Some(f) => Some(f.mean_alpha(&ds.train_x())?),
        None => None,
    };
    Ok(CalibrationRun {
        labels,
        zero_variance: ds.zero_variance.clone(),
        n_train: ds.split.train.len(),
        n_test: ds.split.test.len(),
        scaler: ds.scaler,
        fuser: fit.fuser,
        fusion_losses: fit.fusion_losses,
        mean_alpha,
        feature_importance: fit.model.feature_importance().map(<[f64]>::to_vec),
        model: fit.model,
        cv: fit.cv,
        report: fit.report,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_field, GridSpec, SynthConfig};
    use crate::learners::ForestParams;

    fn small_grid() -> GravityGrid {
        let spec = GridSpec {
            lon0: 0.0,
            lat0: 0.0,
            dlon: 0.1,
            dlat: 0.1,
            n_lon: 24,
            n_lat: 24,
        };
        synth_field(&SynthConfig::random(spec, 7, 0.5)).unwrap()
    }

    fn quick() -> CalibrationConfig {
        CalibrationConfig {
            window: WindowSpec {
                half_m: 2,
                half_n: 2,
            },
            quantile: 0.1,
            model: ModelSpec::Rf(ForestParams {
                n_trees: 15,
                ..Default::default()
            }),
            ..Default::default()
        }
    }

    #[test]
    fn zero_epoch_fusion_is_identity() {
        let g = small_grid();
        let plain = run_calibration(&g, &quick()).unwrap();
        let cfg = CalibrationConfig {
            fusion: Some(FusionTrainConfig {
                epochs: 0,
                ..Default::default()
            }),
            ..quick()
        };
        let fused = run_calibration(&g, &cfg).unwrap();
        assert_eq!(plain.report, fused.report);
        assert_eq!(plain.map, fused.map);
        assert_eq!(plain.model, fused.model);
    }

    #[test]
    fn rerun_is_identical() {
        let g = small_grid();
        let a = run_calibration(&g, &quick()).unwrap();
        let b = run_calibration(&g, &quick()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.map.len(), 24 * 24);
        assert_eq!(a.report.total(), a.n_test);
    }
}
