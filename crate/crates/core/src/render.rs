//! Heatmaps as plain-text PGM (P2) or PPM (P3) images, north up.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

use crate::grid::GravityGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("cannot render an empty grid")]
    EmptyGrid,
    #[error("grid contains non-finite values")]
    NonFinite,
    #[error("{values} values do not fill a {cols}x{rows} raster")]
    ShapeMismatch {
        values: usize,
        cols: usize,
        rows: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Gray,
    /// Blue (minimum) through white to red (maximum).
    BlueRed,
}

impl FromStr for Palette {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gray" | "grey" => Ok(Palette::Gray),
            "bwr" | "blue-red" => Ok(Palette::BlueRed),
            _ => Err(format!("unknown palette `{s}` (gray|bwr)")),
        }
    }
}

/// Position of each value in `[min, max]`; a constant raster maps to 0.5.
fn normalise(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.5 })
        .collect()
}

fn level(t: f64) -> u8 {
    (255.0 * t).round().clamp(0.0, 255.0) as u8
}

fn bwr(t: f64) -> [u8; 3] {
    if t < 0.5 {
        let c = level(2.0 * t);
        [c, c, 255]
    } else {
        let c = level(2.0 - 2.0 * t);
        [255, c, c]
    }
}

/// Renders a row-major raster whose row 0 is the southern edge.
pub fn render_raster(
    values: &[f64],
    cols: usize,
    rows: usize,
    palette: Palette,
) -> Result<String, RenderError> {
    if values.is_empty() || cols == 0 || rows == 0 {
        return Err(RenderError::EmptyGrid);
    }
    if values.len() != cols * rows {
        return Err(RenderError::ShapeMismatch {
            values: values.len(),
            cols,
            rows,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RenderError::NonFinite);
    }
    let t = normalise(values);
    let mut out = String::new();
    match palette {
        Palette::Gray => {
            let _ = write!(out, "P2\n{cols} {rows}\n255\n");
        }
        Palette::BlueRed => {
            let _ = write!(out, "P3\n{cols} {rows}\n255\n");
        }
    }
    for r in (0..rows).rev() {
        let line: Vec<String> = t[r * cols..(r + 1) * cols]
            .iter()
            .map(|&v| match palette {
                Palette::Gray => level(v).to_string(),
                Palette::BlueRed => {
                    let [a, b, c] = bwr(v);
                    format!("{a} {b} {c}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    Ok(out)
}

pub fn render_grid(grid: &GravityGrid, palette: Palette) -> Result<String, RenderError> {
    render_raster(grid.values(), grid.n_lon(), grid.n_lat(), palette)
}
