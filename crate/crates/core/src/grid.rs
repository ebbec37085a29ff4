//! Gravity anomaly rasters and scattered samples.
//!
//! A [`GravityGrid`] stores one anomaly value (mGal) per cell of a regular
//! lon/lat lattice. Storage is row-major with rows ordered by ascending
//! latitude and columns by ascending longitude: cell `(row, col)` sits at
//! `(lon0 + col * dlon, lat0 + row * dlat)` and lives at
//! `values[row * n_lon + col]`.

use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::index;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Relative tolerance on lattice spacing when ingesting decimal text.
pub const SPACING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("irregular grid: {0}")]
    IrregularGrid(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid synthetic field config: {0}")]
    InvalidConfig(String),
    #[error("keep fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GridError {
    fn from(e: std::io::Error) -> Self {
        GridError::Io(e.to_string())
    }
}

/// Placement and resolution of a regular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lon0: f64,
    pub lat0: f64,
    pub dlon: f64,
    pub dlat: f64,
    pub n_lon: usize,
    pub n_lat: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.dlon > 0.0 && self.dlat > 0.0) || !self.dlon.is_finite() || !self.dlat.is_finite()
        {
            return Err(GridError::InvalidGrid(format!(
                "cell size must be positive and finite (dlon={}, dlat={})",
                self.dlon, self.dlat
            )));
        }
        if !self.lon0.is_finite() || !self.lat0.is_finite() {
            return Err(GridError::InvalidGrid("non-finite origin".into()));
        }
        if self.n_lon < 2 || self.n_lat < 2 {
            return Err(GridError::InvalidGrid(format!(
                "need at least 2x2 cells, got {}x{}",
                self.n_lon, self.n_lat
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_lon * self.n_lat
    }

    pub fn lon(&self, col: usize) -> f64 {
        self.lon0 + col as f64 * self.dlon
    }

    pub fn lat(&self, row: usize) -> f64 {
        self.lat0 + row as f64 * self.dlat
    }

    /// Coordinates of the cell at flat index `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.lon(k % self.n_lon), self.lat(k / self.n_lon))
    }

    /// Diagonal length of the lattice extent, in degrees.
    pub fn diagonal(&self) -> f64 {
        let w = (self.n_lon - 1) as f64 * self.dlon;
        let h = (self.n_lat - 1) as f64 * self.dlat;
        w.hypot(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GravityGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        spec.validate()?;
        if values.len() != spec.n_cells() {
            return Err(GridError::InvalidGrid(format!(
                "expected {} values, got {}",
                spec.n_cells(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::InvalidGrid(format!(
                "non-finite value at cell {k}"
            )));
        }
        Ok(GravityGrid { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_lon(&self) -> usize {
        self.spec.n_lon
    }

    pub fn n_lat(&self) -> usize {
        self.spec.n_lat
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.n_lon + col]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Writes the grid as `lon,lat,value` CSV in storage order.
    ///
    /// Floats use Rust's shortest round-trip formatting, so
    /// [`ingest_csv`] recovers every value bit for bit.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lon,lat,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let (lon, lat) = self.spec.coords(k);
            writeln!(out, "{lon},{lat},{v}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Every cell as a sample point.
    pub fn to_samples(&self) -> ScatterSamples {
        let points = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &value)| {
                let (lon, lat) = self.spec.coords(k);
                SamplePoint { lon, lat, value }
            })
            .collect();
        ScatterSamples { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub lon: f64,
    pub lat: f64,
    pub value: f64,
}

/// Irregularly placed anomaly observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterSamples {
    points: Vec<SamplePoint>,
}

impl ScatterSamples {
    /// Rejects empty input, non-finite fields and repeated coordinates.
    pub fn new(points: Vec<SamplePoint>) -> Result<Self, GridError> {
        if points.is_empty() {
            return Err(GridError::EmptyInput);
        }
        if let Some(i) = points
            .iter()
            .position(|p| !(p.lon.is_finite() && p.lat.is_finite() && p.value.is_finite()))
        {
            return Err(GridError::InvalidGrid(format!(
                "sample {i} has a non-finite field"
            )));
        }
        let mut keys: Vec<(u64, u64)> = points
            .iter()
            .map(|p| (p.lon.to_bits(), p.lat.to_bits()))
            .collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(GridError::InvalidGrid(
                "duplicate sample coordinates".into(),
            ));
        }
        Ok(ScatterSamples { points })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lon,lat,value")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.lon, p.lat, p.value)?;
        }
        Ok(())
    }
}

fn parse_records<R: Read>(source: R) -> Result<Vec<SamplePoint>, GridError> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(GridError::EmptyInput),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if cols != ["lon", "lat", "value"] {
        return Err(GridError::MalformedRecord {
            line: 1,
            reason: format!("expected header `lon,lat,value`, found `{}`", header.trim()),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(GridError::MalformedRecord {
                line: lineno,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut parsed = [0.0; 3];
        for (slot, (field, name)) in parsed
            .iter_mut()
            .zip(fields.iter().zip(["lon", "lat", "value"]))
        {
            let v: f64 = field.parse().map_err(|_| GridError::MalformedRecord {
                line: lineno,
                reason: format!("{name} `{field}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(GridError::MalformedRecord {
                    line: lineno,
                    reason: format!("{name} is not finite"),
                });
            }
            *slot = v;
        }
        out.push(SamplePoint {
            lon: parsed[0],
            lat: parsed[1],
            value: parsed[2],
        });
    }
    if out.is_empty() {
        return Err(GridError::EmptyInput);
    }
    Ok(out)
}

/// Recovers a regular axis from the distinct coordinate values on it.
fn fit_axis(mut coords: Vec<f64>, axis: &str) -> Result<(f64, f64, usize), GridError> {
    coords.sort_by(f64::total_cmp);
    coords.dedup();
    if coords.len() < 2 {
        return Err(GridError::IrregularGrid(format!(
            "{axis} axis has fewer than 2 distinct values"
        )));
    }
    let n = coords.len();
    let step = (coords[n - 1] - coords[0]) / (n - 1) as f64;
    for w in coords.windows(2) {
        let d = w[1] - w[0];
        if (d - step).abs() > SPACING_TOLERANCE * step {
            return Err(GridError::IrregularGrid(format!(
                "{axis} spacing {d} deviates from uniform step {step}"
            )));
        }
    }
    Ok((coords[0], step, n))
}

/// Parses `lon,lat,value` CSV describing every cell of a regular grid.
///
/// Records may come in any order; they are placed row-major by ascending
/// latitude, then longitude.
pub fn ingest_csv<R: Read>(source: R) -> Result<GravityGrid, GridError> {
    let records = parse_records(source)?;
    let (lon0, dlon, n_lon) = fit_axis(records.iter().map(|p| p.lon).collect(), "lon")?;
    let (lat0, dlat, n_lat) = fit_axis(records.iter().map(|p| p.lat).collect(), "lat")?;
    let spec = GridSpec {
        lon0,
        lat0,
        dlon,
        dlat,
        n_lon,
        n_lat,
    };
    if records.len() != spec.n_cells() {
        return Err(GridError::IrregularGrid(format!(
            "{} records for a {}x{} lattice",
            records.len(),
            n_lon,
            n_lat
        )));
    }
    let mut values = vec![f64::NAN; spec.n_cells()];
    let mut filled = vec![false; spec.n_cells()];
    for p in &records {
        let col = ((p.lon - lon0) / dlon).round() as usize;
        let row = ((p.lat - lat0) / dlat).round() as usize;
        let k = row * n_lon + col;
        if filled[k] {
            return Err(GridError::IrregularGrid(format!(
                "duplicate cell at ({}, {})",
                p.lon, p.lat
            )));
        }
        filled[k] = true;
        values[k] = p.value;
    }
    if let Some(k) = filled.iter().position(|f| !f) {
        let (lon, lat) = spec.coords(k);
        return Err(GridError::IrregularGrid(format!(
            "missing cell at ({lon}, {lat})"
        )));
    }
    GravityGrid::new(spec, values)
}

/// Parses scattered `lon,lat,value` samples; no lattice is required.
pub fn ingest_samples_csv<R: Read>(source: R) -> Result<ScatterSamples, GridError> {
    ScatterSamples::new(parse_records(source)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lon: f64,
    pub lat: f64,
    /// mGal; negative for a trough.
    pub amplitude: f64,
    /// Gaussian standard deviation in degrees.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub bumps: Vec<Bump>,
    /// `(a, b, c)` of the planar trend `a*lon + b*lat + c`.
    pub trend: (f64, f64, f64),
    pub noise_std: f64,
    pub seed: u64,
    pub grid: GridSpec,
}

impl SynthConfig {
    /// A random field: a handful of bumps and troughs placed inside `grid`.
    pub fn random(grid: GridSpec, seed: u64, noise_std: f64) -> Self {
        use rand::Rng;
        let mut rng = rng::child_rng(seed, 0);
        let extent_lon = (grid.n_lon - 1) as f64 * grid.dlon;
        let extent_lat = (grid.n_lat - 1) as f64 * grid.dlat;
        let scale = extent_lon.min(extent_lat).max(grid.dlon.min(grid.dlat));
        let n_bumps = rng.random_range(4..=8);
        let bumps = (0..n_bumps)
            .map(|_| Bump {
                lon: grid.lon0 + rng.random::<f64>() * extent_lon,
                lat: grid.lat0 + rng.random::<f64>() * extent_lat,
                amplitude: rng.random_range(-60.0..60.0),
                width: scale * rng.random_range(0.05..0.2),
            })
            .collect();
        let trend = (
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            0.0,
        );
        SynthConfig {
            bumps,
            trend,
            noise_std,
            seed,
            grid,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.grid
            .validate()
            .map_err(|e| GridError::InvalidConfig(e.to_string()))?;
        if let Some(b) = self
            .bumps
            .iter()
            .find(|b| !(b.width > 0.0 && b.width.is_finite()))
        {
            return Err(GridError::InvalidConfig(format!(
                "bump width {} must be positive",
                b.width
            )));
        }
        if self
            .bumps
            .iter()
            .any(|b| !(b.lon.is_finite() && b.lat.is_finite() && b.amplitude.is_finite()))
        {
            return Err(GridError::InvalidConfig("non-finite bump parameter".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(GridError::InvalidConfig(format!(
                "noise_std {} must be >= 0",
                self.noise_std
            )));
        }
        let (a, b, c) = self.trend;
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(GridError::InvalidConfig("non-finite trend".into()));
        }
        Ok(())
    }

    /// Noise-free field value at a coordinate.
    pub fn evaluate(&self, lon: f64, lat: f64) -> f64 {
        let (a, b, c) = self.trend;
        let mut v = a * lon + b * lat + c;
        for bump in &self.bumps {
            let d2 = (lon - bump.lon).powi(2) + (lat - bump.lat).powi(2);
            v += bump.amplitude * (-d2 / (2.0 * bump.width * bump.width)).exp();
        }
        v
    }
}

/// Renders a synthetic anomaly field: Gaussian bumps plus a planar trend plus
/// white noise drawn from a stream seeded by `config.seed`.
pub fn synth_field(config: &SynthConfig) -> Result<GravityGrid, GridError> {
    config.validate()?;
    let spec = config.grid;
    let mut values: Vec<f64> = (0..spec.n_cells())
        .map(|k| {
            let (lon, lat) = spec.coords(k);
            config.evaluate(lon, lat)
        })
        .collect();
    if config.noise_std > 0.0 {
        let normal = Normal::new(0.0, config.noise_std)
            .map_err(|e| GridError::InvalidConfig(e.to_string()))?;
        let mut rng = rng::child_rng(config.seed, 1);
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    GravityGrid::new(spec, values)
}

/// Number of cells kept by [`subsample`].
pub fn subsample_size(n_cells: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * n_cells as f64).round() as usize).clamp(1, n_cells)
}

/// Draws `round(keep_fraction * n_cells)` distinct cells (at least one),
/// returned in ascending cell order.
pub fn subsample(
    grid: &GravityGrid,
    keep_fraction: f64,
    seed: u64,
) -> Result<ScatterSamples, GridError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(GridError::InvalidFraction(keep_fraction));
    }
    let n = grid.spec.n_cells();
    let amount = subsample_size(n, keep_fraction);
    let mut rng = rng::rng_from_seed(seed);
    let mut picked = index::sample(&mut rng, n, amount).into_vec();
    picked.sort_unstable();
    let points = picked
        .into_iter()
        .map(|k| {
            let (lon, lat) = grid.spec.coords(k);
            SamplePoint {
                lon,
                lat,
                value: grid.values[k],
            }
        })
        .collect();
    Ok(ScatterSamples { points })
}
