use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solve::solve_dense;
use super::{KrigingError, VariogramModel};
use crate::grid::{GravityGrid, GridSpec, ScatterSamples};

/// Which samples enter each local system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Neighborhood {
    /// The `k` closest samples; distance ties go to the lower sample index.
    Nearest(usize),
    /// Every sample.
    Global,
}

impl Default for Neighborhood {
    fn default() -> Self {
        Neighborhood::Nearest(16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrigeEstimate {
    pub value: f64,
    pub variance: f64,
}

/// Full solution of one local system.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigeSolution {
    /// Indices into the sample list, nearest first.
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
    pub lagrange: f64,
    pub estimate: KrigeEstimate,
    /// Whether the diagonal jitter retry was needed.
    pub regularized: bool,
}

pub struct OrdinaryKriging<'a> {
    samples: &'a ScatterSamples,
    model: VariogramModel,
    neighborhood: Neighborhood,
}

impl<'a> OrdinaryKriging<'a> {
    pub fn new(
        samples: &'a ScatterSamples,
        model: VariogramModel,
        neighborhood: Neighborhood,
    ) -> Result<Self, KrigingError> {
        model.validate()?;
        if samples.is_empty() {
            return Err(KrigingError::TooFewSamples { needed: 1, got: 0 });
        }
        if neighborhood == Neighborhood::Nearest(0) {
            return Err(KrigingError::InvalidParameter(
                "neighborhood size must be >= 1".into(),
            ));
        }
        Ok(OrdinaryKriging {
            samples,
            model,
            neighborhood,
        })
    }

    fn neighbors(&self, lon: f64, lat: f64) -> Vec<usize> {
        let pts = self.samples.points();
        let mut cand: Vec<(f64, usize)> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.lon - lon).powi(2) + (p.lat - lat).powi(2), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = match self.neighborhood {
            Neighborhood::Nearest(k) => k.min(cand.len()),
            Neighborhood::Global => cand.len(),
        };
        if k < cand.len() {
            cand.select_nth_unstable_by(k, cmp);
            cand.truncate(k);
        }
        cand.sort_unstable_by(cmp);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    /// Solves the ordinary kriging system at one target location.
    pub fn solve(&self, lon: f64, lat: f64) -> Result<KrigeSolution, KrigingError> {
        let pts = self.samples.points();
        let neighbors = self.neighbors(lon, lat);
        let k = neighbors.len();
        let n = k + 1;
        let mut a = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (r, &i) in neighbors.iter().enumerate() {
            for (c, &j) in neighbors.iter().enumerate() {
                let d = (pts[i].lon - pts[j].lon).hypot(pts[i].lat - pts[j].lat);
                a[r * n + c] = self.model.gamma(d);
            }
            a[r * n + k] = 1.0;
            a[k * n + r] = 1.0;
            rhs[r] = self.model.gamma((pts[i].lon - lon).hypot(pts[i].lat - lat));
        }
        rhs[k] = 1.0;

        let mut regularized = false;
        let x = match solve_dense(a.clone(), rhs.clone()) {
            Some(x) => x,
            None => {
                regularized = true;
                let jitter = 1e-10 * self.model.sill.max(1.0);
                for r in 0..k {
                    a[r * n + r] += jitter;
                }
                solve_dense(a, rhs.clone()).ok_or(KrigingError::SingularSystem { lon, lat })?
            }
        };
        let weights = x[..k].to_vec();
        let lagrange = x[k];
        let value: f64 = weights
            .iter()
            .zip(&neighbors)
            .map(|(w, &i)| w * pts[i].value)
            .sum();
        let mut variance: f64 =
            weights.iter().zip(&rhs).map(|(w, g)| w * g).sum::<f64>() + lagrange;
        let tol = 1e-9 * self.model.sill.max(1.0);
        if variance < 0.0 && variance >= -tol {
            variance = 0.0;
        }
        Ok(KrigeSolution {
            neighbors,
            weights,
            lagrange,
            estimate: KrigeEstimate { value, variance },
            regularized,
        })
    }
}

/// Ordinary kriging estimate at one location from its `neighborhood_k`
/// nearest samples.
pub fn krige_point(
    samples: &ScatterSamples,
    model: &VariogramModel,
    lon: f64,
    lat: f64,
    neighborhood_k: usize,
) -> Result<KrigeEstimate, KrigingError> {
    let ok = OrdinaryKriging::new(samples, *model, Neighborhood::Nearest(neighborhood_k))?;
    Ok(ok.solve(lon, lat)?.estimate)
}

/// Kriges every node of `spec`. Nodes are solved independently (in parallel
/// on the current rayon pool) and assembled in storage order.
pub fn krige_grid(
    samples: &ScatterSamples,
    model: &VariogramModel,
    spec: &GridSpec,
    neighborhood: Neighborhood,
) -> Result<GravityGrid, KrigingError> {
    spec.validate()
        .map_err(|e| KrigingError::InvalidParameter(e.to_string()))?;
    let ok = OrdinaryKriging::new(samples, *model, neighborhood)?;
    let values = (0..spec.n_cells())
        .into_par_iter()
        .map(|k| {
            let (lon, lat) = spec.coords(k);
            ok.solve(lon, lat).map(|s| s.estimate.value)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    GravityGrid::new(*spec, values).map_err(|e| KrigingError::InvalidParameter(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SamplePoint;
    use crate::kriging::VariogramKind;

    fn samples(pts: &[(f64, f64, f64)]) -> ScatterSamples {
        ScatterSamples::new(
            pts.iter()
                .map(|&(lon, lat, value)| SamplePoint { lon, lat, value })
                .collect(),
        )
        .unwrap()
    }

    fn model(nugget: f64) -> VariogramModel {
        VariogramModel::new(VariogramKind::Spherical, nugget, 4.0, 3.0).unwrap()
    }

    #[test]
    fn exact_at_sample() {
        let s = samples(&[
            (0.0, 0.0, 1.0),
            (1.0, 0.3, 4.0),
            (0.2, 1.5, -2.0),
            (2.0, 2.0, 0.5),
        ]);
        let e = krige_point(&s, &model(0.0), 1.0, 0.3, 4).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
        assert!(e.variance.abs() < 1e-9);
    }

    #[test]
    fn single_sample_gets_full_weight() {
        let s = samples(&[(0.5, 0.5, 3.25)]);
        let ok = OrdinaryKriging::new(&s, model(0.2), Neighborhood::Nearest(1)).unwrap();
        let sol = ok.solve(4.0, -1.0).unwrap();
        assert_eq!(sol.weights, vec![1.0]);
        assert_eq!(sol.estimate.value, 3.25);
    }

    #[test]
    fn symmetric_pair_averages() {
        let s = samples(&[(-1.0, 0.0, 1.0), (1.0, 0.0, 3.0)]);
        for kind in VariogramKind::ALL {
            let m = VariogramModel::new(kind, 0.1, 2.0, 5.0).unwrap();
            let e = krige_point(&s, &m, 0.0, 0.0, 2).unwrap();
            assert!((e.value - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let pts: Vec<(f64, f64, f64)> = (0..40)
            .map(|i| {
                (
                    (i * 37 % 11) as f64 * 0.3,
                    (i * 13 % 7) as f64 * 0.45 + i as f64 * 1e-3,
                    (i as f64).sin(),
                )
            })
            .collect();
        let s = samples(&pts);
        let ok = OrdinaryKriging::new(&s, model(0.1), Neighborhood::Nearest(12)).unwrap();
        for t in 0..25 {
            let sol = ok.solve(t as f64 * 0.13, 3.0 - t as f64 * 0.1).unwrap();
            assert_eq!(sol.neighbors.len(), 12);
            assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(sol.estimate.variance >= 0.0);
        }
    }

    #[test]
    fn global_uses_all_samples() {
        let s = samples(&[(0.0, 0.0, 1.0), (1.0, 0.0, 2.0), (0.0, 1.0, 3.0)]);
        let ok = OrdinaryKriging::new(&s, model(0.0), Neighborhood::Global).unwrap();
        assert_eq!(ok.solve(0.4, 0.4).unwrap().neighbors.len(), 3);
    }

    #[test]
    fn grid_exact_on_its_own_nodes() {
        let spec = GridSpec {
            lon0: 0.0,
            lat0: 0.0,
            dlon: 0.5,
            dlat: 0.5,
            n_lon: 5,
            n_lat: 4,
        };
        let values: Vec<f64> = (0..20).map(|k| (k as f64 * 0.7).cos() * 3.0).collect();
        let g = GravityGrid::new(spec, values).unwrap();
        let out = krige_grid(
            &g.to_samples(),
            &model(0.0),
            &spec,
            Neighborhood::Nearest(8),
        )
        .unwrap();
        for (a, b) in out.values().iter().zip(g.values()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_neighbors_rejected() {
        let s = samples(&[(0.0, 0.0, 1.0)]);
        assert!(OrdinaryKriging::new(&s, model(0.0), Neighborhood::Nearest(0)).is_err());
    }
}
