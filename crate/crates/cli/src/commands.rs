use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use gravzone_core::features::FEATURE_NAMES;
use gravzone_core::fusion::train_fuser;
use gravzone_core::grid::{ingest_csv, ingest_samples_csv, subsample, synth_field};
use gravzone_core::kriging::{empirical_variogram, fit_variogram, krige_grid};
use gravzone_core::pipeline::{
    compare_datasets, grid_dataset, label_by_quantile, run_calibration, synthetic_regions,
    CalibrationRun,
};
use gravzone_core::render::render_grid;
use gravzone_core::rng::child_seed;
use gravzone_core::{
    evaluate, extract_features, GravityGrid, GridSpec, LabeledDataset, Neighborhood, RunConfig,
    SynthConfig,
};

use crate::bundle::Bundle;
use crate::io::{display_name, json_bytes, project_column, read_text, sha256_hex, write_atomic};
use crate::{Command, GridFlags};

/// Inputs and outputs of one invocation, for the report's provenance block.
struct Provenance {
    command: &'static str,
    config: Option<RunConfig>,
    seeds: Value,
    inputs: Vec<(String, String)>,
    artifacts: Vec<(String, String)>,
}

impl Provenance {
    fn new(command: &'static str) -> Self {
        Provenance {
            command,
            config: None,
            seeds: json!({}),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((display_name(path), sha256_hex(bytes)));
    }

    fn artifact(&mut self, path: &Path, bytes: &[u8]) {
        self.artifacts.push((display_name(path), sha256_hex(bytes)));
    }

    fn to_json(&self) -> Value {
        let files = |v: &[(String, String)]| -> Value {
            v.iter()
                .map(|(name, hash)| json!({ "file": name, "sha256": hash }))
                .collect()
        };
        json!({
            "tool": "gravzone",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config.as_ref().map(|c| serde_json::to_value(c).expect("config serializes")),
            "seeds": self.seeds,
            "inputs": files(&self.inputs),
            "artifacts": files(&self.artifacts),
        })
    }
}

fn spec_from(flags: &GridFlags) -> GridSpec {
    GridSpec {
        lon0: flags.lon0,
        lat0: flags.lat0,
        dlon: flags.dlon,
        dlat: flags.dlat,
        n_lon: flags.n_lon,
        n_lat: flags.n_lat,
    }
}

fn load_grid(path: &Path, prov: &mut Provenance) -> Result<GravityGrid> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    prov.input(path, &bytes);
    ingest_csv(bytes.as_slice()).with_context(|| display_name(path).to_string())
}

fn load_config(path: Option<&Path>, prov: &mut Provenance) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => {
            let text = read_text(p)?;
            prov.input(p, text.as_bytes());
            RunConfig::parse(&text).with_context(|| display_name(p).to_string())?
        }
        None => RunConfig::default(),
    };
    Ok(cfg)
}

fn write_report(path: &Path, mut body: Value, prov: &Provenance) -> Result<()> {
    body["provenance"] = prov.to_json();
    write_atomic(path, &json_bytes(&body))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth {
            seed,
            out,
            grid,
            noise,
        } => {
            let cfg = SynthConfig::random(spec_from(&grid), seed, noise);
            let field = synth_field(&cfg)?;
            write_atomic(&out, field.to_csv_string().as_bytes())
        }
        Command::Ingest { input, out } => ingest(&input, out.as_deref()),
        Command::Krige {
            input,
            samples,
            out,
            fraction,
            seed,
            variogram,
            neighbors,
            bins,
            max_lag,
            report,
            samples_out,
        } => {
            let neighborhood =
                match neighbors.as_str() {
                    "all" => Neighborhood::Global,
                    n => Neighborhood::Nearest(n.parse().ok().filter(|&k| k > 0).with_context(
                        || format!("--neighbors must be a positive count or 'all', got '{n}'"),
                    )?),
                };
            if !(max_lag > 0.0 && max_lag <= 1.0) {
                bail!("--max-lag {max_lag} is outside (0, 1]");
            }
            let mut prov = Provenance::new("krige");
            let reference = load_grid(&input, &mut prov)?;
            let scatter = match &samples {
                Some(p) => {
                    let bytes =
                        fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
                    prov.input(p, &bytes);
                    ingest_samples_csv(bytes.as_slice()).with_context(|| display_name(p))?
                }
                None => subsample(&reference, fraction, seed)?,
            };
            prov.seeds = json!({ "subsample": samples.is_none().then_some(seed) });
            let lag = max_lag * reference.spec().diagonal();
            let emp = empirical_variogram(&scatter, bins, lag)?;
            let fit = fit_variogram(&emp, variogram)?;
            let kriged = krige_grid(&scatter, &fit.model, reference.spec(), neighborhood)?;
            let csv = kriged.to_csv_string();
            write_atomic(&out, csv.as_bytes())?;
            prov.artifact(&out, csv.as_bytes());
            if let Some(p) = &samples_out {
                let mut buf = Vec::new();
                scatter.write_csv(&mut buf)?;
                write_atomic(p, &buf)?;
                prov.artifact(p, &buf);
            }
            let sq: f64 = kriged
                .values()
                .iter()
                .zip(reference.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            let rmse = (sq / reference.values().len() as f64).sqrt();
            let (lo, hi) = reference.min_max();
            println!(
                "kriged {} samples onto {}x{} nodes, rmse {rmse:.4}",
                scatter.len(),
                reference.n_lon(),
                reference.n_lat()
            );
            if let Some(p) = &report {
                let body = json!({
                    "n_samples": scatter.len(),
                    "neighborhood": neighborhood,
                    "empirical": emp,
                    "fit": fit,
                    "rmse": rmse,
                    "reference_range": hi - lo,
                    "rmse_over_range": if hi > lo { Some(rmse / (hi - lo)) } else { None },
                });
                write_report(p, body, &prov)?;
            }
            Ok(())
        }
        Command::Features {
            input,
            out,
            half_m,
            half_n,
        } => {
            let grid = load_grid(&input, &mut Provenance::new("features"))?;
            let cube = extract_features(&grid, gravzone_core::WindowSpec { half_m, half_n })?;
            let mut buf = Vec::new();
            cube.write_csv(&mut buf)?;
            write_atomic(&out, &buf)
        }
        Command::Fuse {
            input,
            config,
            out,
            mode,
            epochs,
            report,
        } => {
            let mut prov = Provenance::new("fuse");
            let mut cfg = load_config(config.as_deref(), &mut prov)?;
            if let Some(m) = mode {
                cfg.fusion_mode = m;
            }
            if let Some(e) = epochs {
                cfg.fusion_epochs = e;
            }
            let grid = load_grid(&input, &mut prov)?;
            let (ds, labels) = grid_dataset(&grid, cfg.window(), cfg.quantile, &cfg.split())?;
            let trained = train_fuser(&ds.train_x(), &ds.train_y(), &cfg.fusion_train())?;
            let text = trained.fuser.to_text();
            write_atomic(&out, text.as_bytes())?;
            prov.artifact(&out, text.as_bytes());
            prov.seeds = json!({ "split": cfg.split_seed, "fusion": cfg.seed });
            prov.config = Some(cfg);
            if let Some(p) = &report {
                let alpha = trained.fuser.mean_alpha(&ds.train_x())?;
                let body = json!({
                    "threshold": labels.threshold,
                    "n_train": ds.split.train.len(),
                    "mode": trained.fuser.mode().name(),
                    "initial_loss": trained.losses.first(),
                    "final_loss": trained.losses.last(),
                    "final_lr": trained.final_lr,
                    "losses": trained.losses,
                    "mean_alpha": named(&ds.feature_names, &alpha),
                });
                write_report(p, body, &prov)?;
            }
            Ok(())
        }
        Command::Label {
            input,
            out,
            quantile,
        } => {
            let grid = load_grid(&input, &mut Provenance::new("label"))?;
            let labels = label_by_quantile(grid.values(), quantile)?;
            let mut csv = String::from("lon,lat,value,label\n");
            for (k, (v, l)) in grid.values().iter().zip(&labels.labels).enumerate() {
                let (lon, lat) = grid.spec().coords(k);
                csv.push_str(&format!("{lon},{lat},{v},{l}\n"));
            }
            write_atomic(&out, csv.as_bytes())?;
            println!(
                "threshold {} ({} of {} cells positive)",
                labels.threshold,
                labels.n_positive,
                labels.labels.len()
            );
            Ok(())
        }
        Command::Train {
            input,
            config,
            out_dir,
        } => train(&input, config.as_deref(), &out_dir),
        Command::Eval {
            model,
            input,
            out,
            map,
            quantile,
        } => eval(&model, &input, &out, map.as_deref(), quantile),
        Command::Compare { config, out, text } => compare(config.as_deref(), &out, text.as_deref()),
        Command::Render {
            input,
            out,
            palette,
            column,
        } => {
            let text = read_text(&input)?;
            let header = text.lines().next().unwrap_or_default();
            let plain = header.split(',').map(str::trim).eq(["lon", "lat", "value"]);
            let csv = if plain && column == "value" {
                text
            } else {
                project_column(&text, &column)?
            };
            let grid = ingest_csv(csv.as_bytes()).with_context(|| display_name(&input))?;
            let image = render_grid(&grid, palette)?;
            write_atomic(&out, image.as_bytes())
        }
        Command::DefaultConfig { out } => {
            let text = RunConfig::default().to_text();
            match out {
                Some(p) => write_atomic(&p, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn named(names: &[String], values: &[f64]) -> Value {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| (n.clone(), json!(v)))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn ingest(input: &Path, out: Option<&Path>) -> Result<()> {
    let grid = load_grid(input, &mut Provenance::new("ingest"))?;
    let (lo, hi) = grid.min_max();
    println!(
        "{}: {}x{} grid, values in [{lo}, {hi}]",
        display_name(input),
        grid.n_lon(),
        grid.n_lat()
    );
    if let Some(p) = out {
        write_atomic(p, grid.to_csv_string().as_bytes())?;
    }
    Ok(())
}

fn run_report(run: &CalibrationRun) -> Value {
    let names: Vec<String> = match &run.fuser {
        Some(f) if f.output_dim() != FEATURE_NAMES.len() => {
            (0..f.output_dim()).map(|j| format!("fused{j}")).collect()
        }
        _ => FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let raw_names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    json!({
        "quantile": run.labels.q,
        "threshold": run.labels.threshold,
        "n_positive": run.labels.n_positive,
        "n_cells": run.labels.labels.len(),
        "n_train": run.n_train,
        "n_test": run.n_test,
        "zero_variance_features": run.zero_variance.iter().map(|&j| raw_names[j].clone()).collect::<Vec<_>>(),
        "model": run.model.kind_name(),
        "test": run.report,
        "cv": run.cv.as_ref().map(|c| json!({ "best": c.best, "best_spec": c.best_spec, "mean_scores": c.mean_scores, "fold_scores": c.fold_scores })),
        "feature_importance": run.feature_importance.as_ref().map(|v| named(&names, v)),
        "fusion": run.fuser.as_ref().map(|f| json!({
            "mode": f.mode().name(),
            "final_loss": run.fusion_losses.as_ref().and_then(|l| l.last()),
            "mean_alpha": run.mean_alpha.as_ref().map(|a| named(&raw_names, a)),
        })),
    })
}

fn train(input: &Path, config: Option<&Path>, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("train");
    let cfg = load_config(config, &mut prov)?;
    let grid = load_grid(input, &mut prov)?;
    let run = run_calibration(&grid, &cfg.calibration())?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let bundle = Bundle {
        window: cfg.window(),
        scaler: run.scaler.clone(),
        fuser: run.fuser.clone(),
        model: run.model.clone(),
    };
    let model_path = out_dir.join("model.txt");
    let model_text = bundle.to_text();
    write_atomic(&model_path, model_text.as_bytes())?;
    prov.artifact(&model_path, model_text.as_bytes());
    let map_path = out_dir.join("map.csv");
    let mut map = Vec::new();
    run.write_map_csv(&mut map)?;
    write_atomic(&map_path, &map)?;
    prov.artifact(&map_path, &map);
    prov.seeds = json!({ "model": cfg.seed, "split": cfg.split_seed });
    prov.config = Some(cfg);
    let r = &run.report;
    println!(
        "test split: acc {:.3}, f1 {:.3}, recall {:.3}",
        r.accuracy, r.f1, r.recall
    );
    write_report(&out_dir.join("report.json"), run_report(&run), &prov)
}

fn eval(model: &Path, input: &Path, out: &Path, map: Option<&Path>, quantile: f64) -> Result<()> {
    let mut prov = Provenance::new("eval");
    let text = read_text(model)?;
    prov.input(model, text.as_bytes());
    let bundle = Bundle::from_text(&text).with_context(|| display_name(model))?;
    let grid = load_grid(input, &mut prov)?;
    let cube = extract_features(&grid, bundle.window)?;
    let mut x = bundle.scaler.transform(&cube.to_matrix());
    if let Some(f) = &bundle.fuser {
        x = f.transform(&x)?;
    }
    let preds = bundle.model.predict_matrix(&x)?;
    let labels = label_by_quantile(grid.values(), quantile)?;
    let pred_labels: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let report = evaluate(&pred_labels, &labels.labels)?;
    if let Some(p) = map {
        let mut csv = String::from("lon,lat,label,score,truth\n");
        for ((p, (lon, lat)), t) in preds.iter().zip(cube.coords()).zip(&labels.labels) {
            csv.push_str(&format!("{lon},{lat},{},{},{t}\n", p.label, p.score));
        }
        write_atomic(p, csv.as_bytes())?;
        prov.artifact(p, csv.as_bytes());
    }
    println!(
        "all cells: acc {:.3}, f1 {:.3}, recall {:.3}",
        report.accuracy, report.f1, report.recall
    );
    let body = json!({
        "quantile": quantile,
        "threshold": labels.threshold,
        "n_positive": labels.n_positive,
        "n_cells": labels.labels.len(),
        "model": bundle.model.kind_name(),
        "report": report,
    });
    write_report(out, body, &prov)
}

fn compare(config: Option<&Path>, out: &Path, text_out: Option<&Path>) -> Result<()> {
    let mut prov = Provenance::new("compare");
    let cfg = load_config(config, &mut prov)?;
    let base: PathBuf = config
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let split = cfg.split();
    let mut regions: Vec<(String, LabeledDataset)> = Vec::new();
    for rel in &cfg.region_grids {
        let path = base.join(rel);
        let grid = load_grid(&path, &mut prov)?;
        let (ds, _) = grid_dataset(&grid, cfg.window(), cfg.quantile, &split)
            .with_context(|| format!("region {}", display_name(&path)))?;
        let name = path
            .file_stem()
            .map_or_else(|| rel.clone(), |s| s.to_string_lossy().into_owned());
        regions.push((name, ds));
    }
    for i in 0..cfg.synth_grids {
        let spec = GridSpec {
            lon0: 0.0,
            lat0: 0.0,
            dlon: 0.05,
            dlat: 0.05,
            n_lon: cfg.synth_size,
            n_lat: cfg.synth_size,
        };
        let grid = synth_field(&SynthConfig::random(
            spec,
            child_seed(cfg.seed, i as u64),
            cfg.synth_noise,
        ))?;
        let (ds, _) = grid_dataset(&grid, cfg.window(), cfg.quantile, &split)
            .with_context(|| format!("synthetic grid {}", i + 1))?;
        regions.push((format!("synth{:02}", i + 1), ds));
    }
    if cfg.synth_tabular > 0 {
        let tab = synthetic_regions(
            &cfg.tabular(),
            cfg.synth_tabular,
            child_seed(cfg.seed, 1 << 32),
            &split,
        )?;
        regions.extend(
            tab.into_iter()
                .enumerate()
                .map(|(i, (_, ds))| (format!("tabular{:02}", i + 1), ds)),
        );
    }
    if regions.is_empty() {
        bail!("no regions: set region_grids, synth_grids or synth_tabular");
    }
    let mut table = compare_datasets(&regions, &cfg.compare());
    let rendered = table.render_text();
    if let Some(p) = text_out {
        write_atomic(p, rendered.as_bytes())?;
        prov.artifact(p, rendered.as_bytes());
    }
    prov.seeds = json!({ "model": cfg.seed, "split": cfg.split_seed });
    prov.config = Some(cfg);
    table.provenance = prov.to_json();
    write_atomic(out, table.to_json().as_bytes())?;
    print!("{rendered}");
    Ok(())
}
