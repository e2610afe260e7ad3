//! Discretized immersed closed curves with the L² metric
//! `G_c(h, k) = ∫ ⟨h, k⟩ |c'| dθ`.
//!
//! All integrals are trapezoid sums `Σ_j (·)(θ_j) · 2π/n`, exact for
//! trigonometric polynomials below the Nyquist frequency.

use std::f64::consts::TAU;

use crate::diffeo::CircleDiffeo;
use crate::error::{check_dim, Error, Result};
use crate::geodesics::{
    bvp_minimize, path_length, BvpOptions, EuclideanOracle, MetricOracle, Path,
};
use crate::periodic::{derivative, PeriodicFunction, PeriodicGrid};

/// Speeds at or below this are treated as a failure of immersion.
pub const IMMERSION_TOLERANCE: f64 = 1e-10;

/// `min_j |c'(θ_j)|`.
pub fn immersion_check(pos: &PeriodicFunction) -> f64 {
    speeds(&pos.derivative(1))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn speeds(deriv: &PeriodicFunction) -> Vec<f64> {
    let n = deriv.len();
    (0..n)
        .map(|j| {
            (0..deriv.dim())
                .map(|c| deriv.component(c)[j].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// A closed curve in ℝ^d, `d ≥ 2`, with nowhere-vanishing derivative.
#[derive(Debug, Clone)]
pub struct Curve {
    pos: PeriodicFunction,
    deriv: PeriodicFunction,
    speed: Vec<f64>,
}

impl Curve {
    pub fn new(pos: PeriodicFunction) -> Result<Self> {
        if pos.dim() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: pos.dim(),
            });
        }
        let deriv = pos.derivative(1);
        let speed = speeds(&deriv);
        let margin = speed.iter().copied().fold(f64::INFINITY, f64::min);
        if margin <= IMMERSION_TOLERANCE {
            return Err(Error::NotImmersed { margin });
        }
        Ok(Self { pos, deriv, speed })
    }

    pub fn from_fn(grid: PeriodicGrid, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        Self::new(PeriodicFunction::from_fn(grid, dim, f)?)
    }

    /// Circle of radius `r` about `center`, traversed counter-clockwise.
    pub fn circle(grid: PeriodicGrid, center: [f64; 2], r: f64) -> Result<Self> {
        Self::from_fn(grid, 2, |t, out| {
            out[0] = center[0] + r * t.cos();
            out[1] = center[1] + r * t.sin();
        })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.pos.grid()
    }

    pub fn dim(&self) -> usize {
        self.pos.dim()
    }

    pub fn pos(&self) -> &PeriodicFunction {
        &self.pos
    }

    /// `|c'(θ_j)|`.
    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    pub fn margin(&self) -> f64 {
        self.speed.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Arc length `∫ |c'| dθ`.
    pub fn length(&self) -> f64 {
        self.speed.iter().sum::<f64>() * self.grid().spacing()
    }

    fn check_tangent(&self, h: &PeriodicFunction) -> Result<()> {
        self.pos.check_compatible(h)
    }
}

/// `∫ ⟨h, k⟩ |c'| dθ`.
pub fn l2_metric(c: &Curve, h: &PeriodicFunction, k: &PeriodicFunction) -> Result<f64> {
    c.check_tangent(h)?;
    c.check_tangent(k)?;
    let d = c.dim();
    let sum: f64 = c
        .speed
        .iter()
        .enumerate()
        .map(|(j, s)| {
            s * (0..d)
                .map(|i| h.component(i)[j] * k.component(i)[j])
                .sum::<f64>()
        })
        .sum();
    Ok(sum * c.grid().spacing())
}

/// `D_{c,l}G(h, k) = ∫ ⟨h, k⟩ ⟨l', c'⟩ / |c'| dθ`.
pub fn l2_metric_variation(
    c: &Curve,
    l: &PeriodicFunction,
    h: &PeriodicFunction,
    k: &PeriodicFunction,
) -> Result<f64> {
    c.check_tangent(l)?;
    c.check_tangent(h)?;
    c.check_tangent(k)?;
    let dl = l.derivative(1);
    let d = c.dim();
    let sum: f64 = c
        .speed
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let hk: f64 = (0..d).map(|i| h.component(i)[j] * k.component(i)[j]).sum();
            let lc: f64 = (0..d)
                .map(|i| dl.component(i)[j] * c.deriv.component(i)[j])
                .sum();
            hk * lc / s
        })
        .sum();
    Ok(sum * c.grid().spacing())
}

/// An orientation-preserving reparametrization of the circle.
#[derive(Debug, Clone)]
pub struct Reparametrization(pub CircleDiffeo);

/// `h ∘ φ`, evaluating the trigonometric interpolant of `h` at `φ(θ_j)`.
pub fn reparametrize_tangent(
    h: &PeriodicFunction,
    phi: &Reparametrization,
) -> Result<PeriodicFunction> {
    if phi.0.grid() != h.grid() {
        return Err(Error::GridMismatch(h.len(), phi.0.grid().len()));
    }
    h.interpolant().resample(h.grid(), &phi.0.node_values())
}

/// `c ∘ φ`.
pub fn reparametrize(c: &Curve, phi: &Reparametrization) -> Result<Curve> {
    Curve::new(reparametrize_tangent(&c.pos, phi)?)
}

/// Unit normal obtained by rotating the unit tangent by `-π/2`; it points
/// outward on counter-clockwise curves.
pub fn unit_normal(c: &Curve) -> Result<PeriodicFunction> {
    check_dim(2, c.dim())?;
    let n = c.grid().len();
    let (dx, dy) = (c.deriv.component(0), c.deriv.component(1));
    let nx: Vec<f64> = (0..n).map(|j| dy[j] / c.speed[j]).collect();
    let ny: Vec<f64> = (0..n).map(|j| -dx[j] / c.speed[j]).collect();
    PeriodicFunction::from_components(c.grid(), &[nx, ny])
}

/// `ψ_q(a) = q + a n_q`.
pub fn normal_chart(q: &Curve, a: &PeriodicFunction) -> Result<Curve> {
    check_dim(1, a.dim())?;
    if a.grid() != q.grid() {
        return Err(Error::GridMismatch(q.grid().len(), a.len()));
    }
    let nrm = unit_normal(q)?;
    let n = q.grid().len();
    let comps: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            (0..n)
                .map(|j| q.pos.component(i)[j] + a.values()[j] * nrm.component(i)[j])
                .collect()
        })
        .collect();
    Curve::new(PeriodicFunction::from_components(q.grid(), &comps)?)
}

/// The L² curve metric on flat coordinate vectors (component-major samples),
/// for use with the geodesic solvers.
#[derive(Debug, Clone, Copy)]
pub struct L2CurveOracle {
    grid: PeriodicGrid,
    d: usize,
}

impl L2CurveOracle {
    pub fn new(grid: PeriodicGrid, d: usize) -> Self {
        Self { grid, d }
    }

    pub fn curve(&self, x: &[f64]) -> Result<Curve> {
        check_dim(self.d * self.grid.len(), x.len())?;
        Curve::new(PeriodicFunction::from_values(
            self.grid,
            self.d,
            x.to_vec(),
        )?)
    }

    fn function(&self, v: &[f64]) -> Result<PeriodicFunction> {
        PeriodicFunction::from_values(self.grid, self.d, v.to_vec())
    }
}

impl MetricOracle for L2CurveOracle {
    fn dim(&self) -> usize {
        self.d * self.grid.len()
    }

    fn inner(&self, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let c = self.curve(x)?;
        l2_metric(&c, &self.function(h)?, &self.function(k)?)
    }

    fn has_variation(&self) -> bool {
        true
    }

    fn variation(&self, x: &[f64], l: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let c = self.curve(x)?;
        l2_metric_variation(
            &c,
            &self.function(l)?,
            &self.function(h)?,
            &self.function(k)?,
        )
    }

    fn metric_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let c = self.curve(x)?;
        check_dim(x.len(), v.len())?;
        let n = self.grid.len();
        let w = self.grid.spacing();
        Ok(v.iter()
            .enumerate()
            .map(|(idx, a)| a * c.speed[idx % n] * w)
            .collect())
    }

    /// `e ↦ Σ_j |v_j|² ⟨e'_j, c'_j⟩ / |c'_j| w = -⟨e, D a⟩` with
    /// `a = |v|² c' / |c'| w`, since spectral differentiation is skew.
    fn variation_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let c = self.curve(x)?;
        check_dim(x.len(), v.len())?;
        let n = self.grid.len();
        let w = self.grid.spacing();
        let vv: Vec<f64> = (0..n)
            .map(|j| (0..self.d).map(|i| v[i * n + j].powi(2)).sum())
            .collect();
        let a: Vec<f64> = (0..self.d * n)
            .map(|idx| {
                let j = idx % n;
                vv[j] * c.deriv.values()[idx] / c.speed[j] * w
            })
            .collect();
        let da = derivative(&PeriodicFunction::from_values(self.grid, self.d, a)?, 1);
        Ok(da.values().iter().map(|x| -x).collect())
    }

    fn gram(&self, x: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let c = self.curve(x)?;
        let n = self.grid.len();
        let w = self.grid.spacing();
        let diag = nalgebra::DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|idx| c.speed[idx % n] * w),
        );
        Ok(nalgebra::DMatrix::from_diagonal(&diag))
    }
}

/// One refinement level of the vanishing-distance experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingLevel {
    /// Number of teeth in the initial normal-direction sawtooth.
    pub k: usize,
    /// Samples per curve.
    pub n_samples: usize,
    /// Time steps of the path.
    pub n_steps: usize,
    pub max_iter: usize,
}

/// Row of the vanishing-distance table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingRow {
    pub k: usize,
    pub n_samples: usize,
    pub n_steps: usize,
    pub initial_length: f64,
    pub length: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Which metric the experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishingMetric {
    L2,
    /// Flat control: `Σ_j ⟨h_j, k_j⟩ 2π/n` without the `|c'|` weight.
    Euclidean,
}

/// Default refinement schedule `k = 1, 4, 16`.
pub fn default_vanishing_levels() -> Vec<VanishingLevel> {
    vec![
        VanishingLevel {
            k: 1,
            n_samples: 64,
            n_steps: 8,
            max_iter: 400,
        },
        VanishingLevel {
            k: 4,
            n_samples: 128,
            n_steps: 16,
            max_iter: 400,
        },
        VanishingLevel {
            k: 16,
            n_samples: 256,
            n_steps: 32,
            max_iter: 400,
        },
    ]
}

/// Smoothed triangle wave with `k` teeth, peak value 1.
fn sawtooth(k: usize, theta: f64) -> f64 {
    let kt = k as f64 * theta;
    let norm: f64 = (0..3).map(|m| 1.0 / ((2 * m + 1) as f64).powi(2)).sum();
    (0..3)
        .map(|m| {
            let o = (2 * m + 1) as f64;
            (o * kt).cos() / (o * o)
        })
        .sum::<f64>()
        / norm
}

/// Initial path for level `k`: the straight translation of the unit circle by
/// `shift`, displaced along the outward normal by `0.25/k · sin(πt) · saw_k(θ)`.
pub fn sawtooth_initial_path(
    grid: PeriodicGrid,
    shift: [f64; 2],
    k: usize,
    n_steps: usize,
) -> Result<Path> {
    let amp = 0.25 / k as f64;
    let points = (0..=n_steps)
        .map(|i| {
            let t = i as f64 / n_steps as f64;
            let bump = amp * (std::f64::consts::PI * t).sin();
            let nodes = grid.nodes();
            let xs = nodes
                .iter()
                .map(|&th| (1.0 + bump * sawtooth(k, th)) * th.cos() + t * shift[0]);
            let ys = nodes
                .iter()
                .map(|&th| (1.0 + bump * sawtooth(k, th)) * th.sin() + t * shift[1]);
            xs.chain(ys).collect()
        })
        .collect();
    Path::new(points)
}

/// Minimizes path length between the unit circle and its translate by
/// `(0.5, 0)` at each level, starting from increasingly oscillatory paths.
///
/// Levels that hit their iteration cap report the best path found.
pub fn vanishing_distance_experiment(
    levels: &[VanishingLevel],
    metric: VanishingMetric,
) -> Result<Vec<VanishingRow>> {
    let shift = [0.5, 0.0];
    levels
        .iter()
        .map(|lvl| {
            let grid = PeriodicGrid::new(lvl.n_samples)?;
            let init = sawtooth_initial_path(grid, shift, lvl.k, lvl.n_steps)?;
            let start = init.start().to_vec();
            let end = init.end().to_vec();
            let opts = BvpOptions {
                max_iter: lvl.max_iter,
                ..BvpOptions::default()
            };
            let run = |oracle: &dyn MetricOracle| -> Result<VanishingRow> {
                let initial_length = path_length(&init, oracle)?;
                let (path, report) = match bvp_minimize(&start, &end, oracle, init.clone(), &opts) {
                    Ok(r) => r,
                    Err(Error::NonConvergence(best)) => *best,
                    Err(e) => return Err(e),
                };
                let length = path_length(&path, oracle)?;
                Ok(VanishingRow {
                    k: lvl.k,
                    n_samples: lvl.n_samples,
                    n_steps: lvl.n_steps,
                    initial_length,
                    length,
                    energy: report.energy,
                    iterations: report.iterations,
                    converged: report.converged,
                })
            };
            match metric {
                VanishingMetric::L2 => run(&L2CurveOracle::new(grid, 2)),
                VanishingMetric::Euclidean => run(&EuclideanOracle {
                    dim: 2 * lvl.n_samples,
                    weight: TAU / lvl.n_samples as f64,
                }),
            }
        })
        .collect()
}
