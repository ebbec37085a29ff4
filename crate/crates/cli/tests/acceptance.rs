//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.

use rand::Rng;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gravzone_core::featsel::{
    lasso_fit, lasso_lambda_max, pearson_select, relieff_weights, shapley_importance, ReliefConfig,
    ShapleyConfig,
};
use gravzone_core::features::{self, gradient_raster, Window};
use gravzone_core::fusion::{attention_weights, softmax, surrogate_loss_and_grad, SurrogateParams};
use gravzone_core::grid::{subsample, synth_field, Bump};
use gravzone_core::kriging::{empirical_variogram, fit_variogram, krige_grid, OrdinaryKriging};
use gravzone_core::learners::{train_forest, train_tree, ForestParams, TreeParams};
use gravzone_core::metrics::EvalReport;
use gravzone_core::pipeline::{
    compare_datasets, label_by_quantile, run_calibration, synthetic_regions, CalibrationConfig,
    CompareConfig, SplitConfig, TabularSynth,
};
use gravzone_core::rng::rng_from_seed;
use gravzone_core::{
    evaluate, FusionMode, FusionTrainConfig, GridSpec, Matrix, ModelSpec, Neighborhood,
    SamplePoint, ScatterSamples, SynthConfig, VariogramKind, VariogramModel,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---------------------------------------------------------------- oracles

fn naive_std(v: &[Vec<f64>]) -> f64 {
    let (m, n) = (v.len(), v[0].len());
    let mut mean = 0.0;
    for row in v {
        for x in row {
            mean += x;
        }
    }
    mean /= (m * n) as f64;
    let mut ss = 0.0;
    for row in v {
        for x in row {
            ss += (x - mean) * (x - mean);
        }
    }
    (ss / (m * n - 1) as f64).sqrt()
}

fn naive_roughness(v: &[Vec<f64>]) -> f64 {
    let (m, n) = (v.len(), v[0].len());
    let mut a = 0.0;
    for i in 0..m {
        for j in 1..n {
            a += (v[i][j] - v[i][j - 1]).abs();
        }
    }
    let mut b = 0.0;
    for i in 1..m {
        for j in 0..n {
            b += (v[i][j] - v[i - 1][j]).abs();
        }
    }
    (a / (m * (n - 1)) as f64 + b / ((m - 1) * n) as f64) / 2.0
}

fn naive_corr(v: &[Vec<f64>]) -> f64 {
    let (m, n) = (v.len(), v[0].len());
    let mean = v.iter().flatten().sum::<f64>() / (m * n) as f64;
    let d = |i: usize, j: usize| v[i][j] - mean;
    let denom: f64 = v.iter().flatten().map(|x| (x - mean).powi(2)).sum();
    let mut a = 0.0;
    for i in 0..m {
        for j in 1..n {
            a += d(i, j - 1) * d(i, j);
        }
    }
    let mut b = 0.0;
    for i in 1..m {
        for j in 0..n {
            b += d(i - 1, j) * d(i, j);
        }
    }
    ((a / denom).clamp(-1.0, 1.0) + (b / denom).clamp(-1.0, 1.0)) / 2.0
}

fn naive_skew(v: &[Vec<f64>]) -> f64 {
    let (m, n) = (v.len() as f64, v[0].len() as f64);
    let mean = v.iter().flatten().sum::<f64>() / (m * n);
    let s = naive_std(v);
    let cubes: f64 = v.iter().flatten().map(|x| (x - mean).powi(3)).sum();
    m * n / ((m - 1.0) * (m - 2.0) * (n - 1.0) * (n - 2.0)) * cubes / (s * s * s)
}

fn naive_entropy(v: &[Vec<f64>]) -> f64 {
    let lo = v.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = v
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-12 * (1.0 + hi - lo);
    let total: f64 = v.iter().flatten().map(|x| x - lo + eps).sum();
    -v.iter()
        .flatten()
        .map(|x| (x - lo + eps) / total)
        .map(|p| p * p.log2())
        .sum::<f64>()
}

fn naive_gradient(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (m, n) = (v.len(), v[0].len());
    let diff = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (j0, j1) = (j.saturating_sub(1), (j + 1).min(n - 1));
                    let (i0, i1) = (i.saturating_sub(1), (i + 1).min(m - 1));
                    let gx = diff(v[i][j0], v[i][j1], j1 - j0);
                    let gy = diff(v[i0][j], v[i1][j], i1 - i0);
                    (gx * gx + gy * gy).sqrt()
                })
                .collect()
        })
        .collect()
}

fn flat(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

// --------------------------------------------------------------- criteria

fn c1_formulas() -> Outcome {
    let mut rng = rng_from_seed(1);
    let mut worst: f64 = 0.0;
    for w_idx in 0..200 {
        let (m, n) = (rng.random_range(3..=7), rng.random_range(3..=7));
        let v: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-80.0..80.0)).collect())
            .collect();
        let w = Window::new(m, n, flat(&v));
        let s = naive_gradient(&v);
        let grad = gradient_raster(&flat(&v), m, n).map_err(|e| e.to_string())?;
        let sw = Window::new(m, n, grad.values().to_vec());
        let pairs = [
            ("sigma", features::std_dev(&w).value, naive_std(&v)),
            (
                "roughness",
                features::roughness(&w).value,
                naive_roughness(&v),
            ),
            ("corr", features::correlation(&w).value, naive_corr(&v)),
            (
                "grad_sigma",
                features::gradient_std(&sw).value,
                naive_std(&s),
            ),
            ("skew", features::skewness(&w).value, naive_skew(&v)),
            (
                "entropy",
                features::diff_entropy(&w).value,
                naive_entropy(&v),
            ),
        ];
        for (i, (a, b)) in grad.values().iter().zip(flat(&s)).enumerate() {
            let e = rel_err(*a, b);
            check(e <= 1e-10, || {
                format!("window {w_idx}: gradient cell {i} {a} vs {b}")
            })?;
        }
        for (name, got, want) in pairs {
            let e = rel_err(got, want);
            worst = worst.max(e);
            check(e <= 1e-10, || {
                format!("window {w_idx} ({m}x{n}): {name} {got} vs oracle {want}")
            })?;
        }
    }
    Ok(format!("200 windows, worst relative error {worst:.1e}"))
}

fn c2_kriging_exact() -> Outcome {
    let mut rng = rng_from_seed(2);
    let pts: Vec<SamplePoint> = (0..100)
        .map(|_| {
            let (lon, lat) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            SamplePoint {
                lon,
                lat,
                value: 20.0 * (3.0 * lon).sin() + 10.0 * lat + rng.random_range(-1.0..1.0),
            }
        })
        .collect();
    let samples = ScatterSamples::new(pts.clone()).map_err(|e| e.to_string())?;
    let (mut worst_v, mut worst_w): (f64, f64) = (0.0, 0.0);
    for kind in [VariogramKind::Spherical, VariogramKind::Exponential] {
        let model = VariogramModel::new(kind, 0.0, 150.0, 1.2).map_err(|e| e.to_string())?;
        for nb in [Neighborhood::Nearest(16), Neighborhood::Global] {
            let ok = OrdinaryKriging::new(&samples, model, nb).map_err(|e| e.to_string())?;
            for (i, p) in pts.iter().enumerate() {
                let sol = ok.solve(p.lon, p.lat).map_err(|e| e.to_string())?;
                let e = rel_err(sol.estimate.value, p.value);
                let wsum = (sol.weights.iter().sum::<f64>() - 1.0).abs();
                worst_v = worst_v.max(e);
                worst_w = worst_w.max(wsum);
                check(e <= 1e-6, || {
                    format!(
                        "{kind:?} {nb:?} sample {i}: {} vs {}",
                        sol.estimate.value, p.value
                    )
                })?;
                check(wsum <= 1e-8, || {
                    format!("{kind:?} {nb:?} sample {i}: weights sum off by {wsum:e}")
                })?;
            }
        }
    }
    Ok(format!(
        "worst value error {worst_v:.1e}, worst |sum w - 1| {worst_w:.1e}"
    ))
}

fn c3_reconstruction() -> Outcome {
    let spec = GridSpec {
        lon0: 0.0,
        lat0: 0.0,
        dlon: 0.05,
        dlat: 0.05,
        n_lon: 40,
        n_lat: 40,
    };
    let bumps = vec![
        Bump {
            lon: 0.5,
            lat: 0.6,
            amplitude: 40.0,
            width: 0.25,
        },
        Bump {
            lon: 1.4,
            lat: 1.3,
            amplitude: -30.0,
            width: 0.3,
        },
        Bump {
            lon: 1.2,
            lat: 0.4,
            amplitude: 25.0,
            width: 0.2,
        },
    ];
    let grid = synth_field(&SynthConfig {
        bumps,
        trend: (0.0, 0.0, 0.0),
        noise_std: 0.0,
        seed: 3,
        grid: spec,
    })
    .map_err(|e| e.to_string())?;
    let samples = subsample(&grid, 0.3, 3).map_err(|e| e.to_string())?;
    let emp =
        empirical_variogram(&samples, 15, 0.5 * spec.diagonal()).map_err(|e| e.to_string())?;
    let fit = fit_variogram(&emp, VariogramKind::Spherical).map_err(|e| e.to_string())?;
    let kriged = krige_grid(&samples, &fit.model, &spec, Neighborhood::Nearest(16))
        .map_err(|e| e.to_string())?;
    let n = grid.values().len() as f64;
    let rmse = (kriged
        .values()
        .iter()
        .zip(grid.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let (lo, hi) = grid.min_max();
    let ratio = rmse / (hi - lo);
    check(ratio <= 0.05, || {
        format!(
            "rmse {rmse:.3} is {:.2}% of range {:.2}",
            100.0 * ratio,
            hi - lo
        )
    })?;
    Ok(format!(
        "rmse {rmse:.3} = {:.2}% of range {:.1} ({} samples)",
        100.0 * ratio,
        hi - lo,
        samples.len()
    ))
}

fn c4_fusion_identity() -> Outcome {
    let spec = GridSpec {
        lon0: 0.0,
        lat0: 0.0,
        dlon: 0.05,
        dlat: 0.05,
        n_lon: 30,
        n_lat: 30,
    };
    let grid = synth_field(&SynthConfig::random(spec, 4, 0.5)).map_err(|e| e.to_string())?;
    let base = CalibrationConfig {
        window: gravzone_core::WindowSpec {
            half_m: 3,
            half_n: 3,
        },
        quantile: 0.1,
        model: ModelSpec::Rf(ForestParams {
            n_trees: 30,
            ..Default::default()
        }),
        ..Default::default()
    };
    let plain = run_calibration(&grid, &base).map_err(|e| e.to_string())?;
    let zero_w = CalibrationConfig {
        fusion: Some(FusionTrainConfig {
            epochs: 0,
            mode: FusionMode::Reweight,
            ..Default::default()
        }),
        ..base
    };
    let fused = run_calibration(&grid, &zero_w).map_err(|e| e.to_string())?;
    check(
        fused
            .fuser
            .as_ref()
            .is_some_and(|f| f.weights().iter().all(|&w| w == 0.0)),
        || "fuser weights are not zero".into(),
    )?;
    check(plain.report == fused.report, || {
        format!("reports differ: {:?} vs {:?}", plain.report, fused.report)
    })?;
    check(plain.map == fused.map, || {
        "per-cell predictions differ".into()
    })?;
    check(plain.model == fused.model, || {
        "trained models differ".into()
    })?;
    Ok(format!(
        "{} cells, reports and predictions bitwise equal",
        plain.map.len()
    ))
}

fn c5_gradient_check() -> Outcome {
    let mut rng = rng_from_seed(5);
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..6).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let x = Matrix::from_rows(&rows);
    let y: Vec<u8> = (0..20)
        .map(|i| u8::from(rows[i][0] + 0.5 * rows[i][3] > 0.0))
        .collect();
    let mut worst: f64 = 0.0;
    for mode in [FusionMode::Reweight, FusionMode::Collapse] {
        let mut p = SurrogateParams::zeros(6, mode);
        for v in &mut p.values {
            *v = rng.random_range(-0.5..0.5);
        }
        let (_, grad) = surrogate_loss_and_grad(&p, &x, &y, 1e-2);
        for k in 0..p.values.len() {
            let h = 1e-5;
            let mut plus = p.clone();
            plus.values[k] += h;
            let mut minus = p.clone();
            minus.values[k] -= h;
            let numeric = (surrogate_loss_and_grad(&plus, &x, &y, 1e-2).0
                - surrogate_loss_and_grad(&minus, &x, &y, 1e-2).0)
                / (2.0 * h);
            let e = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(e);
            check(e <= 1e-4, || {
                format!(
                    "{mode:?} parameter {k}: analytic {} vs numeric {numeric}",
                    grad[k]
                )
            })?;
        }
    }
    Ok(format!("both modes, worst relative error {worst:.1e}"))
}

fn c6_attention() -> Outcome {
    let mut rng = rng_from_seed(6);
    let mut worst: f64 = 0.0;
    for t in 0..1000 {
        let n = rng.random_range(2..=8);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..n * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let alpha = attention_weights(&f, &w).map_err(|e| e.to_string())?;
        check(alpha.iter().all(|&a| a > 0.0), || {
            format!("pair {t}: non-positive alpha {alpha:?}")
        })?;
        let dev = (alpha.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(dev);
        check(dev < 1e-9, || format!("pair {t}: alpha sums to 1{dev:+e}"))?;
        // Scores on a 2^-10 lattice so the shifted inputs are exact.
        let s: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-4096..4096) as f64 / 1024.0)
            .collect();
        let c = rng.random_range(-1000..1000) as f64;
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        check(softmax(&s) == softmax(&shifted), || {
            format!("pair {t}: softmax not shift invariant for c = {c}")
        })?;
    }
    let big = softmax(&[1000.0, 1000.0, -1000.0]);
    check(
        big.iter().all(|v| v.is_finite()) && big[0] == big[1],
        || format!("overflow case {big:?}"),
    )?;
    Ok(format!("1000 pairs, worst |sum alpha - 1| {worst:.1e}"))
}

fn c7_forest() -> Outcome {
    let mut rng = rng_from_seed(7);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let y: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
    let x = Matrix::from_rows(&rows);
    let tree = train_tree(&x, &y, &TreeParams::exhaustive(), 42).map_err(|e| e.to_string())?;
    let correct = x
        .iter_rows()
        .zip(&y)
        .filter(|(r, &l)| tree.predict_label(r) == l)
        .count();
    check(correct == 200, || {
        format!("single tree training accuracy {correct}/200")
    })?;

    let mut with_const = rows.clone();
    for r in &mut with_const {
        r.push(3.0);
    }
    let xc = Matrix::from_rows(&with_const);
    let yc: Vec<u8> = with_const
        .iter()
        .map(|r| u8::from(r[0] + r[1] > 0.0))
        .collect();
    let params = ForestParams::default();
    let forest = train_forest(&xc, &yc, &params, 42).map_err(|e| e.to_string())?;
    let imp = forest.feature_importance();
    let total: f64 = imp.iter().sum();
    check((total - 1.0).abs() < 1e-12, || {
        format!("importances sum to {total}")
    })?;
    check(imp[5] == 0.0, || {
        format!("constant feature importance {}", imp[5])
    })?;

    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool")
            .install(|| train_forest(&xc, &yc, &params, 42))
    };
    let one = in_pool(1).map_err(|e| e.to_string())?;
    let many = in_pool(8).map_err(|e| e.to_string())?;
    check(one == many, || {
        "1-thread and 8-thread forests differ".into()
    })?;
    Ok(format!(
        "tree acc 1.0, importance sum {total}, constant feature 0, {} trees identical across pools",
        params.n_trees
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn c8_benchmark() -> Outcome {
    let regions = synthetic_regions(&TabularSynth::default(), 20, 42, &SplitConfig::default())
        .map_err(|e| e.to_string())?;
    let cfg = CompareConfig {
        selectors: Vec::new(),
        ..Default::default()
    };
    let table = compare_datasets(&regions, &cfg);
    let json: serde_json::Value =
        serde_json::from_str(&table.to_json()).map_err(|e| e.to_string())?;
    let cells = json["cells"].as_object().ok_or("no cells object")?;
    check(cells.len() == 20 * 4 * 2, || {
        format!("{} cells, want 160", cells.len())
    })?;
    let f1s = |variant: &str| -> Result<Vec<f64>, String> {
        table
            .regions
            .iter()
            .map(|r| {
                let c = table
                    .cell("rf", variant, r)
                    .ok_or(format!("missing rf/{variant}/{r}"))?;
                c.report
                    .map(|rep| rep.f1)
                    .ok_or(format!("rf/{variant}/{r}: {:?}", c.na_reason))
            })
            .collect()
    };
    let (rf, attn) = (median(f1s("none")?), median(f1s("attn")?));
    check(attn >= rf, || {
        format!("median F1 RF-ATTN {attn:.4} < RF {rf:.4}")
    })?;
    Ok(format!(
        "median test F1 RF-ATTN {attn:.4} >= RF {rf:.4}; 160-cell JSON table"
    ))
}

fn c9_selectors() -> Outcome {
    let mut rng = rng_from_seed(9);
    // Pearson
    let y: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
    let rows: Vec<Vec<f64>> = y
        .iter()
        .map(|&t| vec![rng.random::<f64>(), 2.0 * t + 1.0, rng.random::<f64>()])
        .collect();
    let sel = pearson_select(&Matrix::from_rows(&rows), &y, 1).map_err(|e| e.to_string())?;
    check(sel.selected == [1], || {
        format!("pearson picked {:?}", sel.selected)
    })?;

    // ReliefF
    let mut wins = 0;
    for seed in 0..20u64 {
        let mut r = rng_from_seed(100 + seed);
        let y: Vec<u8> = (0..120).map(|i| (i % 2) as u8).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&l| {
                vec![
                    r.random::<f64>(),
                    f64::from(l) * 2.0 + r.random_range(-0.3..0.3),
                    r.random::<f64>(),
                    r.random::<f64>(),
                ]
            })
            .collect();
        let cfg = ReliefConfig {
            seed,
            ..Default::default()
        };
        let res =
            relieff_weights(&Matrix::from_rows(&rows), &y, &cfg).map_err(|e| e.to_string())?;
        if [0, 2, 3].iter().all(|&j| res.scores[1] > res.scores[j]) {
            wins += 1;
        }
    }
    check(wins >= 18, || {
        format!("relieff ranked the separating feature first in {wins}/20 seeds")
    })?;

    // LASSO: standardized x, y = x (correlation 1)
    let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let mean = xs.iter().sum::<f64>() / 50.0;
    let sd = (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
    let z: Vec<f64> = xs.iter().map(|v| (v - mean) / sd).collect();
    let xm = Matrix::from_rows(&z.iter().map(|&v| [v]).collect::<Vec<_>>());
    let fit = lasso_fit(&xm, &z, 0.3).map_err(|e| e.to_string())?;
    check((fit.beta[0] - 0.7).abs() < 1e-10, || {
        format!("univariate beta {} != 0.7", fit.beta[0])
    })?;
    let rows3: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let (x3, _) = gravzone_core::featsel::standardize_columns(&Matrix::from_rows(&rows3));
    let y3: Vec<f64> = x3
        .iter_rows()
        .map(|r| r[0] - 0.5 * r[2] + rng.random_range(-0.2..0.2))
        .collect();
    let lmax = lasso_lambda_max(&x3, &y3);
    for scale in [1.0, 1.5] {
        let f = lasso_fit(&x3, &y3, lmax * scale).map_err(|e| e.to_string())?;
        check(f.beta.iter().all(|&b| b == 0.0), || {
            format!("support at lambda = {scale} lambda_max: {:?}", f.beta)
        })?;
    }

    // Shapley symmetry on duplicated columns
    let yb: Vec<u8> = (0..150).map(|i| u8::from(i % 4 == 0)).collect();
    let rowsb: Vec<Vec<f64>> = yb
        .iter()
        .map(|&l| {
            let a = f64::from(l) + rng.random_range(-0.6..0.6);
            vec![a, a, rng.random::<f64>()]
        })
        .collect();
    let trainer = |x: &Matrix, y: &[u8]| {
        ModelSpec::Rf(ForestParams {
            n_trees: 20,
            ..Default::default()
        })
        .fit(x, y, 42)
    };
    let shap = shapley_importance(
        &Matrix::from_rows(&rowsb),
        &yb,
        trainer,
        &ShapleyConfig {
            n_permutations: 40,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let se = shap.std_errors.as_ref().ok_or("no standard errors")?;
    let gap = (shap.scores[0] - shap.scores[1]).abs();
    let bound = 2.0 * (se[0].powi(2) + se[1].powi(2)).sqrt();
    check(gap <= bound, || {
        format!(
            "duplicate shapley values {:.4} vs {:.4}, bound {bound:.4}",
            shap.scores[0], shap.scores[1]
        )
    })?;
    Ok(format!("pearson ok, relieff {wins}/20, lasso beta 0.7 and empty at lambda_max, shapley gap {gap:.4} <= {bound:.4}"))
}

fn c10_metrics() -> Outcome {
    let (tp, tn, fp, fn_) = (5usize, 90usize, 3usize, 2usize);
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for (p, t, k) in [(1u8, 1u8, tp), (0, 0, tn), (1, 0, fp), (0, 1, fn_)] {
        pred.extend(std::iter::repeat_n(p, k));
        truth.extend(std::iter::repeat_n(t, k));
    }
    let r = evaluate(&pred, &truth).map_err(|e| e.to_string())?;
    let precision = 5.0 / 8.0;
    let recall = 5.0 / 7.0;
    let f1 = 2.0 * precision * recall / (precision + recall);
    check((r.tp, r.tn, r.fp, r.fn_) == (tp, tn, fp, fn_), || {
        format!("confusion {r:?}")
    })?;
    check((r.accuracy - 0.95).abs() < 1e-15, || {
        format!("accuracy {}", r.accuracy)
    })?;
    check((r.precision - 0.625).abs() < 1e-15, || {
        format!("precision {}", r.precision)
    })?;
    check((r.recall - recall).abs() < 1e-15, || {
        format!("recall {}", r.recall)
    })?;
    check(
        (r.f1 - f1).abs() < 1e-15 && (r.f1 - 0.667).abs() < 5e-4,
        || format!("f1 {}", r.f1),
    )?;
    let z = EvalReport::from_counts(0, 10, 0, 0);
    check(
        z.precision == 0.0
            && z.recall == 0.0
            && z.f1 == 0.0
            && z.precision_undefined
            && z.recall_undefined
            && z.f1_undefined,
        || format!("zero-division case {z:?}"),
    )?;
    Ok(format!(
        "acc {}, precision {}, recall {:.6}, f1 {:.6}, zero cases flagged",
        r.accuracy, r.precision, r.recall, r.f1
    ))
}

fn c11_quantile() -> Outcome {
    let values: Vec<f64> = (1..=100).map(f64::from).collect();
    let labels = label_by_quantile(&values, 0.05).map_err(|e| e.to_string())?;
    // rank (N-1)q = 4.95 between the 5th and 6th order statistics
    let want = 5.0 + 0.95 * (6.0 - 5.0);
    check((labels.threshold - want).abs() < 1e-12, || {
        format!("threshold {}", labels.threshold)
    })?;
    check(
        labels.n_positive == 5 && labels.labels[..5].iter().all(|&l| l == 1),
        || format!("{} positives", labels.n_positive),
    )?;
    Ok(format!(
        "threshold {}, {} positives",
        labels.threshold, labels.n_positive
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gravzone"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    fs::write(
        d.join("c.toml"),
        "window_half_m = 3\nwindow_half_n = 3\nquantile = 0.1\nn_trees = 30\nfusion = true\nfusion_epochs = 100\n\
         synth_grids = 2\nsynth_size = 30\nshapley_permutations = 5\n",
    )
    .map_err(|e| e.to_string())?;
    let mut artifacts = Vec::new();
    for run in ["a", "b", "t1", "t4"] {
        let threads: &[&str] = match run {
            "t1" => &["--threads", "1"],
            "t4" => &["--threads", "4"],
            _ => &[],
        };
        fs::create_dir_all(d.join(run)).map_err(|e| e.to_string())?;
        let p = |f: &str| format!("{run}/{f}");
        let steps: Vec<Vec<String>> = vec![
            vec![
                "synth".into(),
                "--seed".into(),
                "12".into(),
                "--n-lon".into(),
                "30".into(),
                "--n-lat".into(),
                "30".into(),
                "--out".into(),
                p("g.csv"),
            ],
            vec![
                "krige".into(),
                "--in".into(),
                p("g.csv"),
                "--out".into(),
                p("k.csv"),
                "--report".into(),
                p("k.json"),
            ],
            vec![
                "train".into(),
                "--in".into(),
                p("g.csv"),
                "--config".into(),
                "c.toml".into(),
                "--out-dir".into(),
                p("train"),
            ],
            vec![
                "compare".into(),
                "--config".into(),
                "c.toml".into(),
                "--out".into(),
                p("t.json"),
                "--text".into(),
                p("t.txt"),
            ],
            vec![
                "render".into(),
                "--in".into(),
                p("train/map.csv"),
                "--column".into(),
                "score".into(),
                "--out".into(),
                p("m.ppm"),
                "--palette".into(),
                "bwr".into(),
            ],
        ];
        for step in &steps {
            let args: Vec<&str> = threads
                .iter()
                .copied()
                .chain(step.iter().map(String::as_str))
                .collect();
            run_cli(d, &args)?;
        }
        artifacts = [
            "g.csv",
            "k.csv",
            "k.json",
            "train/model.txt",
            "train/report.json",
            "train/map.csv",
            "t.json",
            "t.txt",
            "m.ppm",
        ]
        .map(String::from)
        .to_vec();
    }
    for f in &artifacts {
        let base = fs::read(d.join("a").join(f)).map_err(|e| format!("{f}: {e}"))?;
        for run in ["b", "t1", "t4"] {
            let other = fs::read(d.join(run).join(f)).map_err(|e| format!("{run}/{f}: {e}"))?;
            check(base == other, || {
                format!("{f} differs between run a and {run}")
            })?;
        }
    }
    Ok(format!(
        "{} artifacts byte-identical across reruns and --threads 1/4",
        artifacts.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("formula oracles", c1_formulas, Some(Duration::from_secs(5))),
        (
            "kriging exactness",
            c2_kriging_exact,
            Some(Duration::from_secs(5)),
        ),
        (
            "kriging reconstruction",
            c3_reconstruction,
            Some(Duration::from_secs(30)),
        ),
        ("fusion identity", c4_fusion_identity, None),
        ("fusion gradient check", c5_gradient_check, None),
        ("attention weights", c6_attention, None),
        ("forest correctness", c7_forest, None),
        (
            "directional synthetic benchmark",
            c8_benchmark,
            Some(Duration::from_secs(300)),
        ),
        ("selector sanity", c9_selectors, None),
        ("metrics arithmetic", c10_metrics, None),
        ("quantile labeling", c11_quantile, None),
        ("determinism", c12_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if took > *l => Err(format!("took {took:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{took:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{took:.2?}]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
