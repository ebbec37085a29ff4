use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::calibrate::fit_dataset;
use super::{LabeledDataset, PipelineError};
use crate::featsel::{
    lasso_select, pearson_select, relieff_weights, shapley_importance, LassoConfig, ReliefConfig,
    SelectionResult, SelectorKind, ShapleyConfig,
};
use crate::fusion::FusionTrainConfig;
use crate::learners::{AdaBoostParams, ForestParams, GbdtParams, ModelKind, ModelSpec, SvmParams};
use crate::metrics::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionVariant {
    None,
    Attn,
}

impl FusionVariant {
    pub fn name(self) -> &'static str {
        match self {
            FusionVariant::None => "none",
            FusionVariant::Attn => "attn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub models: Vec<ModelKind>,
    pub fusion_variants: Vec<FusionVariant>,
    pub selectors: Vec<SelectorKind>,
    /// Model trained on each selector's feature subset.
    pub selector_model: ModelKind,
    pub k_select: usize,
    pub model_seed: u64,
    pub fusion: FusionTrainConfig,
    pub rf: ForestParams,
    pub adaboost: AdaBoostParams,
    pub gbdt: GbdtParams,
    pub svm: SvmParams,
    pub relieff: ReliefConfig,
    pub shapley: ShapleyConfig,
    pub lasso: LassoConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            models: ModelKind::ALL.to_vec(),
            fusion_variants: vec![FusionVariant::None, FusionVariant::Attn],
            selectors: SelectorKind::ALL.to_vec(),
            selector_model: ModelKind::Rf,
            k_select: 4,
            model_seed: 42,
            fusion: FusionTrainConfig::default(),
            rf: ForestParams::default(),
            adaboost: AdaBoostParams::default(),
            gbdt: GbdtParams::default(),
            svm: SvmParams::default(),
            relieff: ReliefConfig::default(),
            shapley: ShapleyConfig::default(),
            lasso: LassoConfig::default(),
        }
    }
}

impl CompareConfig {
    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Rf => ModelSpec::Rf(self.rf),
            ModelKind::AdaBoost => ModelSpec::AdaBoost(self.adaboost),
            ModelKind::Gbdt => ModelSpec::Gbdt(self.gbdt),
            ModelKind::Svm => ModelSpec::Svm(self.svm),
        }
    }
}

/// Metrics in percent at one decimal, or the reason the cell is NA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub selector: String,
    pub region: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub na_reason: Option<String>,
    #[serde(skip)]
    pub report: Option<EvalReport>,
}

impl CellResult {
    fn from_outcome(
        model: &str,
        selector: &str,
        region: &str,
        outcome: Result<EvalReport, String>,
    ) -> Self {
        let mut cell = CellResult {
            model: model.to_string(),
            selector: selector.to_string(),
            region: region.to_string(),
            acc: None,
            f1: None,
            recall: None,
            na_reason: None,
            report: None,
        };
        match outcome {
            Ok(r) => {
                cell.acc = Some(format_percent(r.accuracy));
                cell.f1 = Some(format_percent(r.f1));
                cell.recall = Some(format_percent(r.recall));
                cell.report = Some(r);
            }
            Err(reason) => cell.na_reason = Some(reason),
        }
        cell
    }

    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.model, self.selector, self.region)
    }

    /// `RF-ATTN / Northeast: Acc 95.7, F1 97.8, Recall 95.7`
    pub fn render(&self) -> String {
        let label = if self.selector == "none" {
            self.model.to_uppercase()
        } else {
            format!(
                "{}-{}",
                self.model.to_uppercase(),
                self.selector.to_uppercase()
            )
        };
        match (&self.na_reason, self.acc, self.f1, self.recall) {
            (None, Some(a), Some(f), Some(r)) => {
                format!(
                    "{label} / {}: Acc {a:.1}, F1 {f:.1}, Recall {r:.1}",
                    self.region
                )
            }
            (reason, ..) => format!(
                "{label} / {}: NA ({})",
                self.region,
                reason.as_deref().unwrap_or("missing")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<SelectionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub na_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub regions: Vec<String>,
    /// Keyed `model/selector/region`; `selector` is `none`, `attn` or a
    /// selector name.
    pub cells: BTreeMap<String, CellResult>,
    /// Keyed `selector/region`.
    pub selections: BTreeMap<String, SelectionOutcome>,
    pub provenance: serde_json::Value,
}

impl ComparisonTable {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    /// One line per cell, grouped by region in input order.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for region in &self.regions {
            for cell in self.cells.values().filter(|c| &c.region == region) {
                let _ = writeln!(out, "{}", cell.render());
            }
        }
        out
    }

    pub fn cell(&self, model: &str, selector: &str, region: &str) -> Option<&CellResult> {
        self.cells.get(&format!("{model}/{selector}/{region}"))
    }
}

/// Percent rounded to one decimal.
pub fn format_percent(ratio: f64) -> f64 {
    (ratio * 1000.0).round() / 10.0
}

fn run_selector(
    kind: SelectorKind,
    ds: &LabeledDataset,
    cfg: &CompareConfig,
) -> Result<SelectionResult, PipelineError> {
    let (x, y) = (ds.train_x(), ds.train_y());
    let k = cfg.k_select;
    Ok(match kind {
        SelectorKind::Pearson => {
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            pearson_select(&x, &yf, k)?
        }
        SelectorKind::Relieff => relieff_weights(
            &x,
            &y,
            &ReliefConfig {
                k_select: k,
                ..cfg.relieff
            },
        )?,
        SelectorKind::Lasso => lasso_select(
            &x,
            &y,
            &LassoConfig {
                k_select: k,
                ..cfg.lasso
            },
        )?,
        SelectorKind::Shapley => {
            let spec = cfg.spec(cfg.selector_model);
            let seed = cfg.model_seed;
            shapley_importance(
                &x,
                &y,
                |xs, ys| spec.fit(xs, ys, seed),
                &ShapleyConfig {
                    k_select: k,
                    ..cfg.shapley
                },
            )?
        }
    })
}

fn restrict(ds: &LabeledDataset, cols: &[usize]) -> LabeledDataset {
    LabeledDataset {
        x: ds.x.select_columns(cols),
        feature_names: cols
            .iter()
            .filter_map(|&c| ds.feature_names.get(c).cloned())
            .collect(),
        ..ds.clone()
    }
}

enum Job {
    Model(ModelKind, FusionVariant),
    Selector(SelectorKind),
}

/// Runs every configured model/fusion and selector combination on each
/// region's fixed split. Failures become NA cells.
pub fn compare_datasets(
    regions: &[(String, LabeledDataset)],
    cfg: &CompareConfig,
) -> ComparisonTable {
    let selections: Vec<((usize, SelectorKind), Result<SelectionResult, String>)> = regions
        .par_iter()
        .enumerate()
        .flat_map_iter(|(r, (_, ds))| {
            cfg.selectors
                .iter()
                .map(move |&s| ((r, s), run_selector(s, ds, cfg).map_err(|e| e.to_string())))
        })
        .collect();
    let mut jobs = Vec::new();
    for r in 0..regions.len() {
        for &m in &cfg.models {
            for &v in &cfg.fusion_variants {
                jobs.push((r, Job::Model(m, v)));
            }
        }
        for &s in &cfg.selectors {
            jobs.push((r, Job::Selector(s)));
        }
    }
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|(r, job)| {
            let (region, ds) = &regions[*r];
            match job {
                Job::Model(m, v) => {
                    let fusion = (*v == FusionVariant::Attn).then_some(&cfg.fusion);
                    let outcome = fit_dataset(ds, fusion, &cfg.spec(*m), None, cfg.model_seed)
                        .map(|f| f.report)
                        .map_err(|e| e.to_string());
                    CellResult::from_outcome(m.name(), v.name(), region, outcome)
                }
                Job::Selector(s) => {
                    let sel = &selections
                        .iter()
                        .find(|((rr, ss), _)| rr == r && ss == s)
                        .expect("selection ran")
                        .1;
                    let outcome = match sel {
                        Err(e) => Err(e.clone()),
                        Ok(res) if res.selected.is_empty() => {
                            Err("selector kept no features".to_string())
                        }
                        Ok(res) => fit_dataset(
                            &restrict(ds, &res.selected),
                            None,
                            &cfg.spec(cfg.selector_model),
                            None,
                            cfg.model_seed,
                        )
                        .map(|f| f.report)
                        .map_err(|e| e.to_string()),
                    };
                    CellResult::from_outcome(cfg.selector_model.name(), s.name(), region, outcome)
                }
            }
        })
        .collect();
    let cells = cells.into_iter().map(|c| (c.key(), c)).collect();
    let selections = selections
        .into_iter()
        .map(|((r, s), res)| {
            let outcome = match res {
                Ok(result) => SelectionOutcome {
                    result: Some(result),
                    na_reason: None,
                },
                Err(e) => SelectionOutcome {
                    result: None,
                    na_reason: Some(e),
                },
            };
            (format!("{}/{}", s.name(), regions[r].0), outcome)
        })
        .collect();
    ComparisonTable {
        regions: regions.iter().map(|(n, _)| n.clone()).collect(),
        cells,
        selections,
        provenance: serde_json::json!({
            "config": cfg,
            "model_seed": cfg.model_seed,
            "split_seeds": regions.iter().map(|(n, d)| (n.clone(), d.split.train.len(), d.split.test.len())).collect::<Vec<_>>(),
        }),
    }
}
