//! Numerical weak Riemannian geometry on spaces of curves, landmarks and
//! circle diffeomorphisms.
//!
//! - [`periodic`]: spectral calculus on the circle and Sobolev inner products.
//! - [`curves`]: immersed closed curves with the L² metric.
//! - [`geodesics`]: path energy, boundary-value and shooting solvers over any [`MetricOracle`].
//! - [`hilbert`]: truncated Hilbert sphere and Grossman's ellipsoid.
//! - [`diffeo`]: circle and line diffeomorphisms and their flows.
//! - [`kernels`]: kernel-induced metrics on landmark configurations.

pub mod curves;
pub mod diffeo;
pub mod error;
pub mod geodesics;
pub mod hilbert;
pub mod kernels;
pub mod periodic;

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use curves::{Curve, L2CurveOracle, Reparametrization};
pub use diffeo::{CircleDiffeo, CircleField, FlowResult, LineGrid, TimeDependentField};
pub use error::{Error, Result};
pub use geodesics::{BvpOptions, EuclideanOracle, GeodesicReport, MetricOracle, Path};
pub use hilbert::{EllipsoidOracle, EllipsoidSpec, SphereOracle};
pub use kernels::{GramMatrix, Kernel, LandmarkConfig, LandmarkOracle};
pub use periodic::{PeriodicFunction, PeriodicGrid, SpectralCoeffs, TrigInterpolant};
