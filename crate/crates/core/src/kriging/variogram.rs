use serde::{Deserialize, Serialize};

use super::KrigingError;
use crate::grid::ScatterSamples;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VariogramKind {
    #[default]
    Spherical,
    Exponential,
    Gaussian,
}

impl VariogramKind {
    pub const ALL: [VariogramKind; 3] = [
        VariogramKind::Spherical,
        VariogramKind::Exponential,
        VariogramKind::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariogramKind::Spherical => "spherical",
            VariogramKind::Exponential => "exponential",
            VariogramKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for VariogramKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariogramKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown variogram kind `{s}` (spherical|exponential|gaussian)"))
    }
}

/// Isotropic variogram with nugget, sill and (practical) range.
///
/// `gamma(h) = nugget + (sill - nugget) * shape(h / range)` where `shape` is
/// the spherical polynomial, `1 - exp(-3t)` or `1 - exp(-3t^2)`. The nugget is
/// a continuous offset, so `gamma(0) = nugget`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub kind: VariogramKind,
    pub nugget: f64,
    pub sill: f64,
    pub range: f64,
}

impl VariogramModel {
    pub fn new(
        kind: VariogramKind,
        nugget: f64,
        sill: f64,
        range: f64,
    ) -> Result<Self, KrigingError> {
        let m = VariogramModel {
            kind,
            nugget,
            sill,
            range,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), KrigingError> {
        let finite = self.nugget.is_finite() && self.sill.is_finite() && self.range.is_finite();
        if !finite || self.nugget < 0.0 || self.sill < self.nugget || self.range <= 0.0 {
            return Err(KrigingError::InvalidParameter(format!(
                "variogram needs 0 <= nugget <= sill and range > 0 (nugget={}, sill={}, range={})",
                self.nugget, self.sill, self.range
            )));
        }
        Ok(())
    }

    pub fn gamma(&self, h: f64) -> f64 {
        let t = h / self.range;
        let shape = match self.kind {
            VariogramKind::Spherical => {
                if t >= 1.0 {
                    1.0
                } else {
                    1.5 * t - 0.5 * t * t * t
                }
            }
            VariogramKind::Exponential => 1.0 - (-3.0 * t).exp(),
            VariogramKind::Gaussian => 1.0 - (-3.0 * t * t).exp(),
        };
        self.nugget + (self.sill - self.nugget) * shape
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagBin {
    /// Mean separation of the pairs in the bin.
    pub lag: f64,
    pub gamma: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    pub bins: Vec<LagBin>,
    pub max_lag: f64,
    /// Sample variance of the values the bins were computed from, when known.
    pub sample_variance: Option<f64>,
}

/// Classical (Matheron) estimator over `n_bins` equal-width lag classes on
/// `[0, max_lag]`. Empty classes are dropped.
pub fn empirical_variogram(
    samples: &ScatterSamples,
    n_bins: usize,
    max_lag: f64,
) -> Result<EmpiricalVariogram, KrigingError> {
    let pts = samples.points();
    if pts.len() < 2 {
        return Err(KrigingError::TooFewSamples {
            needed: 2,
            got: pts.len(),
        });
    }
    if n_bins == 0 || !(max_lag > 0.0 && max_lag.is_finite()) {
        return Err(KrigingError::InvalidParameter(format!(
            "n_bins={n_bins}, max_lag={max_lag}"
        )));
    }
    let width = max_lag / n_bins as f64;
    let mut sum_sq = vec![0.0; n_bins];
    let mut sum_d = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d = (a.lon - b.lon).hypot(a.lat - b.lat);
            if d > max_lag {
                continue;
            }
            let bin = ((d / width) as usize).min(n_bins - 1);
            let diff = a.value - b.value;
            sum_sq[bin] += diff * diff;
            sum_d[bin] += d;
            count[bin] += 1;
        }
    }
    let bins: Vec<LagBin> = (0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| LagBin {
            lag: sum_d[b] / count[b] as f64,
            gamma: sum_sq[b] / (2.0 * count[b] as f64),
            pairs: count[b],
        })
        .collect();
    if bins.is_empty() {
        return Err(KrigingError::NoPairsInRange(max_lag));
    }
    let n = pts.len() as f64;
    let mean = pts.iter().map(|p| p.value).sum::<f64>() / n;
    let var = pts.iter().map(|p| (p.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(EmpiricalVariogram {
        bins,
        max_lag,
        sample_variance: Some(var),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramFit {
    pub model: VariogramModel,
    /// Pair-weighted sum of squared residuals at the optimum.
    pub weighted_sse: f64,
    /// Set when every bin has zero semivariance and a nugget-only model was returned.
    pub degenerate: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Minimizes `f` along one coordinate on `[lo, hi]`: a coarse scan picks a
/// bracket, golden-section search refines it. Returns the better of the
/// refined point and `current`.
fn line_search(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, current: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    const SCAN: usize = 24;
    let step = (hi - lo) / SCAN as f64;
    let mut best = (current, f(current));
    for i in 0..=SCAN {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let refined = golden_section(f, a, b, 60);
    let rv = f(refined);
    if rv < best.1 {
        refined
    } else {
        best.0
    }
}

/// Fits nugget, sill and range by pair-weighted least squares under the
/// bounds `nugget in [0, max gamma]`, `sill in [nugget, 2 max gamma]`,
/// `range in (0, 2 max_lag]`, using cyclic coordinate line searches.
pub fn fit_variogram(
    emp: &EmpiricalVariogram,
    kind: VariogramKind,
) -> Result<VariogramFit, KrigingError> {
    if emp.bins.len() < 3 {
        return Err(KrigingError::TooFewBins(emp.bins.len()));
    }
    let gmax = emp.bins.iter().fold(0.0_f64, |m, b| m.max(b.gamma));
    if gmax <= 0.0 {
        return Ok(VariogramFit {
            model: VariogramModel {
                kind,
                nugget: 0.0,
                sill: 0.0,
                range: emp.max_lag,
            },
            weighted_sse: 0.0,
            degenerate: true,
        });
    }
    let sse = |nugget: f64, sill: f64, range: f64| -> f64 {
        let m = VariogramModel {
            kind,
            nugget,
            sill,
            range,
        };
        emp.bins
            .iter()
            .map(|b| b.pairs as f64 * (m.gamma(b.lag) - b.gamma).powi(2))
            .sum()
    };
    let range_hi = 2.0 * emp.max_lag;
    let range_lo = emp.max_lag * 1e-6;
    let mut nugget = emp.bins[0].gamma.clamp(0.0, gmax);
    let mut sill = emp
        .sample_variance
        .unwrap_or(gmax)
        .clamp(nugget, 2.0 * gmax);
    let mut range = (emp.max_lag / 2.0).clamp(range_lo, range_hi);
    let mut current = sse(nugget, sill, range);
    for _ in 0..400 {
        let before = current;
        nugget = line_search(&|x| sse(x, sill.max(x), range), 0.0, gmax, nugget);
        sill = sill.max(nugget);
        sill = line_search(&|x| sse(nugget, x, range), nugget, 2.0 * gmax, sill);
        range = line_search(&|x| sse(nugget, sill, x), range_lo, range_hi, range);
        // the nugget/sill ridge is slow for single coordinates; move both together
        let shift = line_search(
            &|d| sse(nugget + d, sill + d, range),
            -nugget,
            (gmax - nugget).min(2.0 * gmax - sill),
            0.0,
        );
        nugget += shift;
        sill += shift;
        current = sse(nugget, sill, range);
        if before - current <= 1e-14 * before.max(1e-300) {
            break;
        }
    }
    Ok(VariogramFit {
        model: VariogramModel {
            kind,
            nugget,
            sill,
            range,
        },
        weighted_sse: current,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SamplePoint;

    fn samples(pts: &[(f64, f64, f64)]) -> ScatterSamples {
        ScatterSamples::new(
            pts.iter()
                .map(|&(lon, lat, value)| SamplePoint { lon, lat, value })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empirical_two_points() {
        let e = empirical_variogram(&samples(&[(0.0, 0.0, 5.0), (1.0, 0.0, 5.0)]), 4, 2.0).unwrap();
        assert_eq!(e.bins.len(), 1);
        assert_eq!(e.bins[0].gamma, 0.0);
        let e = empirical_variogram(&samples(&[(0.0, 0.0, 0.0), (1.0, 0.0, 2.0)]), 4, 2.0).unwrap();
        assert_eq!(e.bins[0].gamma, 2.0);
        assert_eq!(e.bins[0].lag, 1.0);
        assert_eq!(e.bins[0].pairs, 1);
    }

    #[test]
    fn empirical_errors() {
        let far = samples(&[(0.0, 0.0, 1.0), (10.0, 0.0, 2.0), (0.0, 10.0, 3.0)]);
        assert_eq!(
            empirical_variogram(&far, 5, 1.0),
            Err(KrigingError::NoPairsInRange(1.0))
        );
        let one = samples(&[(0.0, 0.0, 1.0)]);
        assert!(matches!(
            empirical_variogram(&one, 5, 1.0),
            Err(KrigingError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn empirical_matches_pair_enumeration() {
        let pts: Vec<(f64, f64, f64)> = (0..12)
            .map(|i| {
                (
                    (i % 4) as f64 * 0.7,
                    (i / 4) as f64 * 0.9,
                    ((i * 7) % 5) as f64,
                )
            })
            .collect();
        let e = empirical_variogram(&samples(&pts), 3, 2.0).unwrap();
        // independent recount of the second lag class
        let (mut s, mut c) = (0.0, 0);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i < j {
                    let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                    if (2.0 / 3.0..4.0 / 3.0).contains(&d) {
                        s += (pts[i].2 - pts[j].2).powi(2);
                        c += 1;
                    }
                }
            }
        }
        let bin = e
            .bins
            .iter()
            .find(|b| b.lag >= 2.0 / 3.0 && b.lag < 4.0 / 3.0)
            .unwrap();
        assert_eq!(bin.pairs, c);
        assert!((bin.gamma - s / (2.0 * c as f64)).abs() < 1e-12);
    }

    fn synthetic(model: &VariogramModel, lags: &[f64], max_lag: f64) -> EmpiricalVariogram {
        EmpiricalVariogram {
            bins: lags
                .iter()
                .map(|&h| LagBin {
                    lag: h,
                    gamma: model.gamma(h),
                    pairs: 10,
                })
                .collect(),
            max_lag,
            sample_variance: None,
        }
    }

    #[test]
    fn fit_recovers_spherical() {
        let truth = VariogramModel::new(VariogramKind::Spherical, 0.0, 4.0, 2.0).unwrap();
        let emp = synthetic(&truth, &[0.25, 0.6, 1.0, 1.4, 1.8, 2.6], 3.0);
        let fit = fit_variogram(&emp, VariogramKind::Spherical).unwrap();
        assert!(fit.model.nugget <= 0.04, "{:?}", fit);
        assert!((fit.model.sill - 4.0).abs() / 4.0 < 0.01, "{:?}", fit);
        assert!((fit.model.range - 2.0).abs() / 2.0 < 0.01, "{:?}", fit);
    }

    #[test]
    fn fit_recovers_other_kinds() {
        for kind in [VariogramKind::Exponential, VariogramKind::Gaussian] {
            let truth = VariogramModel::new(kind, 0.5, 3.0, 1.5).unwrap();
            let emp = synthetic(&truth, &[0.1, 0.3, 0.5, 0.8, 1.1, 1.5, 2.0, 2.5], 2.5);
            let fit = fit_variogram(&emp, kind).unwrap();
            assert!(
                (fit.model.sill - 3.0).abs() / 3.0 < 0.01,
                "{kind:?} {fit:?}"
            );
            assert!(
                (fit.model.range - 1.5).abs() / 1.5 < 0.01,
                "{kind:?} {fit:?}"
            );
            assert!((fit.model.nugget - 0.5).abs() < 0.02, "{kind:?} {fit:?}");
        }
    }

    #[test]
    fn fit_degenerate_and_too_few() {
        let emp = EmpiricalVariogram {
            bins: (1..5)
                .map(|i| LagBin {
                    lag: i as f64,
                    gamma: 0.0,
                    pairs: 3,
                })
                .collect(),
            max_lag: 5.0,
            sample_variance: Some(0.0),
        };
        let fit = fit_variogram(&emp, VariogramKind::Spherical).unwrap();
        assert!(fit.degenerate);
        assert_eq!(
            (fit.model.nugget, fit.model.sill, fit.model.range),
            (0.0, 0.0, 5.0)
        );
        let two = EmpiricalVariogram {
            bins: emp.bins[..2].to_vec(),
            ..emp
        };
        assert_eq!(
            fit_variogram(&two, VariogramKind::Spherical),
            Err(KrigingError::TooFewBins(2))
        );
    }

    #[test]
    fn models_are_monotone_and_saturate() {
        for kind in VariogramKind::ALL {
            let m = VariogramModel::new(kind, 0.3, 2.0, 1.7).unwrap();
            assert_eq!(m.gamma(0.0), 0.3);
            let mut prev = m.gamma(0.0);
            for i in 1..=4000 {
                let g = m.gamma(4.0 * 1.7 * i as f64 / 4000.0);
                assert!(g >= prev - 1e-15, "{kind:?} decreases");
                prev = g;
            }
            assert!((m.gamma(1e3) - 2.0).abs() < 1e-9);
        }
    }
}
