use thiserror::Error;

use crate::geodesics::{GeodesicReport, Path};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure mode surfaced by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid size {0}: must be a power of two and at least 4")]
    InvalidGrid(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid mismatch: {0} vs {1} samples")]
    GridMismatch(usize, usize),
    #[error("negative Sobolev order {0}")]
    NegativeOrder(f64),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("curve is not immersed: minimal speed {margin:e}")]
    NotImmersed { margin: f64 },
    #[error("map is not orientation preserving: min derivative {min_derivative:e}")]
    NotOrientationPreserving { min_derivative: f64 },
    #[error("point outside the chart domain (<x, x0> = {0:e})")]
    OutOfChart(f64),
    #[error("expected a unit vector, norm is {0}")]
    NonUnit(f64),
    #[error("metric oracle provides no variation and finite differences were not permitted")]
    MissingVariation,
    #[error("point rejected by metric oracle: {0}")]
    Inadmissible(String),
    #[error("geodesic solver did not converge after {} iterations (grad norm {:e})", .0.1.iterations, .0.1.grad_norm)]
    NonConvergence(Box<(Path, GeodesicReport)>),
    #[error("Gram matrix is numerically singular (condition number {condition:e})")]
    SingularGram { condition: f64 },
    #[error("ODE integration collapsed: {0}")]
    StepCollapse(String),
    #[error("vector field nearly vanishes (min |u| = {0:e})")]
    VanishingField(f64),
    #[error("map is not periodic under the required shift (defect {0:e})")]
    NotPeriodic(f64),
    #[error("parameter out of range: {0}")]
    ParameterViolation(String),
    #[error("displacement does not decay at the window boundary (|f| = {0:e})")]
    NonDecaying(f64),
    #[error("degenerate landmark configuration: {0}")]
    DegenerateConfig(String),
    #[error("unsupported kernel order {0}")]
    UnsupportedOrder(u32),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
