//! Semivariogram estimation and ordinary kriging.

mod ordinary;
mod solve;
mod variogram;

pub use ordinary::{
    krige_grid, krige_point, KrigeEstimate, KrigeSolution, Neighborhood, OrdinaryKriging,
};
pub use solve::solve_dense;
pub use variogram::{
    empirical_variogram, fit_variogram, EmpiricalVariogram, LagBin, VariogramFit, VariogramKind,
    VariogramModel,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrigingError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("no sample pairs within max lag {0}")]
    NoPairsInRange(f64),
    #[error("need at least 3 occupied lag bins, got {0}")]
    TooFewBins(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular kriging system at ({lon}, {lat}); duplicate or degenerate sample geometry")]
    SingularSystem { lon: f64, lat: f64 },
}
