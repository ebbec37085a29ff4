//! Sliding-window statistics of an anomaly raster.
//!
//! Six statistics are computed for every cell from the window centred on it:
//! standard deviation, roughness, lag-1 correlation, standard deviation of
//! the gradient magnitude, skewness and entropy. Windows are clipped at the
//! raster border; the clipped extent `m x n` (rows x columns) is what the
//! formulas see. A statistic whose formula degenerates (0/0, too few cells)
//! is reported as 0 and flagged.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GravityGrid, GridSpec};
use crate::matrix::Matrix;

pub const N_FEATURES: usize = 6;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "sigma",
    "roughness",
    "corr",
    "grad_sigma",
    "skew",
    "entropy",
];

/// Variance below which correlation and skewness are treated as undefined.
const FLAT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("window centre ({row}, {col}) outside a {rows}x{cols} raster")]
    CenterOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("window half extents must be >= 1 (got {half_m}, {half_n})")]
    InvalidWindow { half_m: usize, half_n: usize },
    #[error("raster of {rows}x{cols} is too small for gradients (need 2x2)")]
    GridTooSmall { rows: usize, cols: usize },
}

/// Half extents of the extraction window: `(2*half_m+1) x (2*half_n+1)`
/// cells before clipping, `half_m` along rows (latitude).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub half_m: usize,
    pub half_n: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            half_m: 5,
            half_n: 5,
        }
    }
}

/// A statistic value and whether it hit a degenerate case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub value: f64,
    pub degenerate: bool,
}

impl Stat {
    fn ok(value: f64) -> Self {
        Stat {
            value,
            degenerate: false,
        }
    }

    fn degenerate() -> Self {
        Stat {
            value: 0.0,
            degenerate: true,
        }
    }
}

/// A clipped `m x n` block of raster values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    m: usize,
    n: usize,
}

impl Window {
    /// Panics if `values.len() != m * n` or either side is zero.
    pub fn new(m: usize, n: usize, values: Vec<f64>) -> Self {
        assert!(
            m >= 1 && n >= 1 && values.len() == m * n,
            "bad window shape"
        );
        Window { values, m, n }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn transpose(&self) -> Window {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.n {
            for i in 0..self.m {
                values.push(self.at(i, j));
            }
        }
        Window {
            values,
            m: self.n,
            n: self.m,
        }
    }
}

fn window_from(
    values: &[f64],
    rows: usize,
    cols: usize,
    row: usize,
    col: usize,
    spec: WindowSpec,
) -> Result<Window, FeatureError> {
    if spec.half_m == 0 || spec.half_n == 0 {
        return Err(FeatureError::InvalidWindow {
            half_m: spec.half_m,
            half_n: spec.half_n,
        });
    }
    if row >= rows || col >= cols {
        return Err(FeatureError::CenterOutOfBounds {
            row,
            col,
            rows,
            cols,
        });
    }
    let r0 = row.saturating_sub(spec.half_m);
    let r1 = (row + spec.half_m).min(rows - 1);
    let c0 = col.saturating_sub(spec.half_n);
    let c1 = (col + spec.half_n).min(cols - 1);
    let mut out = Vec::with_capacity((r1 - r0 + 1) * (c1 - c0 + 1));
    for r in r0..=r1 {
        out.extend_from_slice(&values[r * cols + c0..=r * cols + c1]);
    }
    Ok(Window {
        values: out,
        m: r1 - r0 + 1,
        n: c1 - c0 + 1,
    })
}

/// Window of `grid` centred on cell `(row, col)`, clipped to the grid.
pub fn window_view(
    grid: &GravityGrid,
    row: usize,
    col: usize,
    spec: WindowSpec,
) -> Result<Window, FeatureError> {
    window_from(grid.values(), grid.n_lat(), grid.n_lon(), row, col, spec)
}

fn sample_std(w: &Window) -> Stat {
    let count = w.values.len();
    if count < 2 {
        return Stat::degenerate();
    }
    let mean = w.mean();
    let ss: f64 = w.values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Stat::ok((ss / (count - 1) as f64).sqrt())
}

/// Sample standard deviation of the window, `sqrt(sum (x - mean)^2 / (mn - 1))`.
pub fn std_dev(w: &Window) -> Stat {
    sample_std(w)
}

/// Mean of the longitude and latitude roughness, each the mean absolute
/// first difference along its axis (0 for an axis of length 1).
pub fn roughness(w: &Window) -> Stat {
    let (m, n) = (w.m, w.n);
    let r_lon = if n >= 2 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..n - 1 {
                s += (w.at(i, j + 1) - w.at(i, j)).abs();
            }
        }
        s / (m * (n - 1)) as f64
    } else {
        0.0
    };
    let r_lat = if m >= 2 {
        let mut s = 0.0;
        for i in 0..m - 1 {
            for j in 0..n {
                s += (w.at(i + 1, j) - w.at(i, j)).abs();
            }
        }
        s / ((m - 1) * n) as f64
    } else {
        0.0
    };
    Stat::ok((r_lon + r_lat) / 2.0)
}

/// Mean of the lag-1 autocorrelations along longitude and latitude, both
/// centred on the window mean and clamped to `[-1, 1]`.
pub fn correlation(w: &Window) -> Stat {
    let (m, n) = (w.m, w.n);
    let mean = w.mean();
    let denom: f64 = w.values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom / (m * n) as f64 <= FLAT_TOLERANCE {
        return Stat::degenerate();
    }
    let mut lon = 0.0;
    for i in 0..m {
        for j in 0..n.saturating_sub(1) {
            lon += (w.at(i, j) - mean) * (w.at(i, j + 1) - mean);
        }
    }
    let mut lat = 0.0;
    for i in 0..m.saturating_sub(1) {
        for j in 0..n {
            lat += (w.at(i, j) - mean) * (w.at(i + 1, j) - mean);
        }
    }
    let r_lon = (lon / denom).clamp(-1.0, 1.0);
    let r_lat = (lat / denom).clamp(-1.0, 1.0);
    Stat::ok((r_lon + r_lat) / 2.0)
}

/// Sample standard deviation of a window of gradient magnitudes.
pub fn gradient_std(w: &Window) -> Stat {
    sample_std(w)
}

/// Skewness with the `mn / ((m-1)(m-2)(n-1)(n-2))` normalisation:
/// `C = mn / ((m-1)(m-2)(n-1)(n-2)) * sum (x - mean)^3 / sigma^3`.
pub fn skewness(w: &Window) -> Stat {
    let (m, n) = (w.m, w.n);
    if m < 3 || n < 3 {
        return Stat::degenerate();
    }
    let sigma = sample_std(w).value;
    if sigma < FLAT_TOLERANCE {
        return Stat::degenerate();
    }
    let mean = w.mean();
    let cubes: f64 = w.values.iter().map(|v| (v - mean).powi(3)).sum();
    let (mf, nf) = (m as f64, n as f64);
    let constant = mf * nf / ((mf - 1.0) * (mf - 2.0) * (nf - 1.0) * (nf - 2.0));
    Stat::ok(constant * cubes / sigma.powi(3))
}

/// Shannon entropy in bits of the min-shifted window mass
/// `P = (x - min + eps) / sum (x - min + eps)`, `eps = 1e-12 (1 + range)`.
pub fn diff_entropy(w: &Window) -> Stat {
    let (lo, hi) = w
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let eps = 1e-12 * (1.0 + (hi - lo));
    let total: f64 = w.values.iter().map(|v| v - lo + eps).sum();
    let h: f64 = w
        .values
        .iter()
        .map(|v| (v - lo + eps) / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    Stat::ok(h.max(0.0))
}

/// Per-cell gradient magnitude in value units per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientGrid {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl GradientGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn window(&self, row: usize, col: usize, spec: WindowSpec) -> Result<Window, FeatureError> {
        window_from(&self.values, self.rows, self.cols, row, col, spec)
    }
}

/// Gradient magnitude of a row-major raster: central differences inside,
/// one-sided differences on the border.
pub fn gradient_raster(
    values: &[f64],
    rows: usize,
    cols: usize,
) -> Result<GradientGrid, FeatureError> {
    if rows < 2 || cols < 2 {
        return Err(FeatureError::GridTooSmall { rows, cols });
    }
    assert_eq!(values.len(), rows * cols);
    let at = |r: usize, c: usize| values[r * cols + c];
    let diff = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    let mut out = Vec::with_capacity(values.len());
    for r in 0..rows {
        for c in 0..cols {
            let gx = match c {
                0 => diff(at(r, 0), at(r, 1), 1),
                _ if c == cols - 1 => diff(at(r, c - 1), at(r, c), 1),
                _ => diff(at(r, c - 1), at(r, c + 1), 2),
            };
            let gy = match r {
                0 => diff(at(0, c), at(1, c), 1),
                _ if r == rows - 1 => diff(at(r - 1, c), at(r, c), 1),
                _ => diff(at(r - 1, c), at(r + 1, c), 2),
            };
            out.push(gx.hypot(gy));
        }
    }
    Ok(GradientGrid {
        rows,
        cols,
        values: out,
    })
}

pub fn gradient_field(grid: &GravityGrid) -> Result<GradientGrid, FeatureError> {
    gradient_raster(grid.values(), grid.n_lat(), grid.n_lon())
}

/// The six statistics for one cell, in [`FEATURE_NAMES`] order.
pub type FeatureVector = [f64; N_FEATURES];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCube {
    spec: GridSpec,
    window: WindowSpec,
    cells: Vec<FeatureVector>,
    degenerate: [usize; N_FEATURES],
}

impl FeatureCube {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn cells(&self) -> &[FeatureVector] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> &FeatureVector {
        &self.cells[row * self.spec.n_lon + col]
    }

    /// Number of cells whose statistic hit a degenerate case, per channel.
    pub fn degenerate_counts(&self) -> [usize; N_FEATURES] {
        self.degenerate
    }

    /// One row per cell, one column per statistic.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.cells.len(),
            N_FEATURES,
            self.cells.iter().flatten().copied().collect(),
        )
    }

    pub fn coords(&self) -> Vec<(f64, f64)> {
        (0..self.cells.len()).map(|k| self.spec.coords(k)).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lon,lat,{}", FEATURE_NAMES.join(","))?;
        for (k, f) in self.cells.iter().enumerate() {
            let (lon, lat) = self.spec.coords(k);
            write!(out, "{lon},{lat}")?;
            for v in f {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn cell_features(
    grid: &GravityGrid,
    gradient: &GradientGrid,
    row: usize,
    col: usize,
    spec: WindowSpec,
) -> Result<[Stat; N_FEATURES], FeatureError> {
    let w = window_view(grid, row, col, spec)?;
    let gw = gradient.window(row, col, spec)?;
    Ok([
        std_dev(&w),
        roughness(&w),
        correlation(&w),
        gradient_std(&gw),
        skewness(&w),
        diff_entropy(&w),
    ])
}

/// Computes all six statistics for every cell. Cells are processed in
/// parallel and assembled in storage order.
pub fn extract_features(grid: &GravityGrid, spec: WindowSpec) -> Result<FeatureCube, FeatureError> {
    if spec.half_m == 0 || spec.half_n == 0 {
        return Err(FeatureError::InvalidWindow {
            half_m: spec.half_m,
            half_n: spec.half_n,
        });
    }
    let gradient = gradient_field(grid)?;
    let n_lon = grid.n_lon();
    let stats = (0..grid.spec().n_cells())
        .into_par_iter()
        .map(|k| cell_features(grid, &gradient, k / n_lon, k % n_lon, spec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut degenerate = [0; N_FEATURES];
    let cells = stats
        .iter()
        .map(|s| {
            let mut v = [0.0; N_FEATURES];
            for (c, st) in s.iter().enumerate() {
                v[c] = st.value;
                degenerate[c] += st.degenerate as usize;
            }
            v
        })
        .collect();
    Ok(FeatureCube {
        spec: *grid.spec(),
        window: spec,
        cells,
        degenerate,
    })
}
