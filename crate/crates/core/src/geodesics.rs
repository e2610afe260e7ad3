//! Path energy, path length and geodesic solvers over an abstract metric.
//!
//! A space plugs into the solvers through [`MetricOracle`]: points are flat
//! vectors in ℝ^m, `inner` evaluates `G_x(h, k)` and `variation` the
//! directional derivative `D_{x,l}G(h, k)`. Paths are sampled at uniform times
//! `t_i = i / n_steps` and the energy uses midpoint quadrature:
//!
//! ```text
//! E = ½ Σ_i G(m_i, v_i, v_i) Δt,   m_i = (x_i + x_{i+1})/2,   v_i = (x_{i+1} - x_i)/Δt
//! ```

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Gram matrices whose condition number exceeds this are treated as singular.
pub const SINGULAR_GRAM_CONDITION: f64 = 1e12;

/// The interface a space exposes to the geodesic solvers.
///
/// Only `dim` and `inner` are required. The covector methods have generic
/// implementations looping over the standard basis; spaces with structure
/// override them.
pub trait MetricOracle {
    fn dim(&self) -> usize;

    /// `G_x(h, k)`; errors if `x` is not an admissible point.
    fn inner(&self, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64>;

    fn has_variation(&self) -> bool {
        false
    }

    /// `D_{x,l}G(h, k)`.
    fn variation(&self, _x: &[f64], _l: &[f64], _h: &[f64], _k: &[f64]) -> Result<f64> {
        Err(Error::MissingVariation)
    }

    /// The covector `j ↦ G_x(v, e_j)`.
    fn metric_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.dim()];
        (0..self.dim())
            .map(|j| {
                e[j] = 1.0;
                let r = self.inner(x, v, &e);
                e[j] = 0.0;
                r
            })
            .collect()
    }

    /// The covector `j ↦ D_{x,e_j}G(v, v)`.
    fn variation_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.dim()];
        (0..self.dim())
            .map(|j| {
                e[j] = 1.0;
                let r = self.variation(x, &e, v, v);
                e[j] = 0.0;
                r
            })
            .collect()
    }

    /// Gram matrix `G_x(e_i, e_j)`.
    fn gram(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.dim();
        let mut g = DMatrix::zeros(m, m);
        let mut e = vec![0.0; m];
        for i in 0..m {
            e[i] = 1.0;
            let row = self.metric_covector(x, &e)?;
            e[i] = 0.0;
            for (j, v) in row.into_iter().enumerate() {
                g[(i, j)] = v;
            }
        }
        Ok(g)
    }

    /// Right-hand side `b_j = 2 D_{x,v}G(v, e_j) - D_{x,e_j}G(v, v)` of the
    /// Christoffel system `2 G(Γ(v,v), e_j) = b_j`.
    fn christoffel_rhs(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        let across = self.variation_covector(x, v)?;
        let mut e = vec![0.0; m];
        (0..m)
            .map(|j| {
                e[j] = 1.0;
                let r = self.variation(x, v, v, &e);
                e[j] = 0.0;
                Ok(2.0 * r? - across[j])
            })
            .collect()
    }
}

impl<M: MetricOracle + ?Sized> MetricOracle for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn inner(&self, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        (**self).inner(x, h, k)
    }
    fn has_variation(&self) -> bool {
        (**self).has_variation()
    }
    fn variation(&self, x: &[f64], l: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        (**self).variation(x, l, h, k)
    }
    fn metric_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        (**self).metric_covector(x, v)
    }
    fn variation_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        (**self).variation_covector(x, v)
    }
    fn gram(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).gram(x)
    }
    fn christoffel_rhs(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        (**self).christoffel_rhs(x, v)
    }
}

/// Flat metric `G(h, k) = weight · ⟨h, k⟩` on ℝ^m.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanOracle {
    pub dim: usize,
    pub weight: f64,
}

impl EuclideanOracle {
    pub fn new(dim: usize) -> Self {
        Self { dim, weight: 1.0 }
    }
}

impl MetricOracle for EuclideanOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn inner(&self, _x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        Ok(self.weight * dot(h, k))
    }
    fn has_variation(&self) -> bool {
        true
    }
    fn variation(&self, _x: &[f64], _l: &[f64], _h: &[f64], _k: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
    fn metric_covector(&self, _x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(v.iter().map(|a| self.weight * a).collect())
    }
    fn variation_covector(&self, _x: &[f64], _v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
    fn christoffel_rhs(&self, _x: &[f64], _v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.dim])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

/// Fourth-order central difference of `G` along `l`.
pub fn fd_variation<M: MetricOracle + ?Sized>(
    oracle: &M,
    x: &[f64],
    l: &[f64],
    h: &[f64],
    k: &[f64],
) -> Result<f64> {
    let ln = max_abs(l);
    if ln == 0.0 {
        return Ok(0.0);
    }
    let eps = 1e-3 * (1.0 + max_abs(x)).min(1.0) / ln;
    let at = |s: f64| -> Result<f64> {
        let y: Vec<f64> = x.iter().zip(l).map(|(a, b)| a + s * b).collect();
        oracle.inner(&y, h, k)
    };
    Ok((-at(2.0 * eps)? + 8.0 * at(eps)? - 8.0 * at(-eps)? + at(-2.0 * eps)?) / (12.0 * eps))
}

fn fd_variation_covector<M: MetricOracle + ?Sized>(
    oracle: &M,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let mut e = vec![0.0; oracle.dim()];
    (0..oracle.dim())
        .map(|j| {
            e[j] = 1.0;
            let r = fd_variation(oracle, x, &e, v, v);
            e[j] = 0.0;
            r
        })
        .collect()
}

/// A discrete path `x_0, …, x_T` at uniform times in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::ParameterViolation(
                "a path needs at least two points".into(),
            ));
        }
        let m = points[0].len();
        for p in &points {
            check_dim(m, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("path point"));
            }
        }
        Ok(Self { points })
    }

    /// Straight segment from `a` to `b` with `n_steps` intervals.
    pub fn linear(a: &[f64], b: &[f64], n_steps: usize) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        if n_steps == 0 {
            return Err(Error::ParameterViolation("n_steps must be positive".into()));
        }
        let points = (0..=n_steps)
            .map(|i| {
                let t = i as f64 / n_steps as f64;
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (1.0 - t) * x + t * y)
                    .collect()
            })
            .collect();
        Self::new(points)
    }

    pub fn n_steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_steps() as f64
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.points[self.n_steps()]
    }

    /// Velocity at `t = 0` from the one-sided second-order difference
    /// `(-3 x_0 + 4 x_1 - x_2) / 2Δt`; first order when `n_steps = 1`.
    pub fn initial_velocity(&self) -> Vec<f64> {
        let p = &self.points;
        let dt = self.dt();
        if p.len() < 3 {
            return p[1].iter().zip(&p[0]).map(|(b, a)| (b - a) / dt).collect();
        }
        (0..self.dim())
            .map(|j| (-3.0 * p[0][j] + 4.0 * p[1][j] - p[2][j]) / (2.0 * dt))
            .collect()
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }

    fn segment(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let dt = self.dt();
        let a = &self.points[i];
        let b = &self.points[i + 1];
        let mid = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let vel = a.iter().zip(b).map(|(x, y)| (y - x) / dt).collect();
        (mid, vel)
    }
}

/// Outcome of a boundary-value solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicReport {
    pub energy: f64,
    pub length: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn segment_norms<M: MetricOracle + ?Sized>(path: &Path, oracle: &M) -> Result<Vec<f64>> {
    check_dim(oracle.dim(), path.dim())?;
    (0..path.n_steps())
        .map(|i| {
            let (mid, vel) = path.segment(i);
            oracle.inner(&mid, &vel, &vel)
        })
        .collect()
}

/// `½ Σ G(m_i, v_i, v_i) Δt`.
pub fn path_energy<M: MetricOracle + ?Sized>(path: &Path, oracle: &M) -> Result<f64> {
    let dt = path.dt();
    Ok(0.5 * segment_norms(path, oracle)?.iter().sum::<f64>() * dt)
}

/// `Σ √G(m_i, v_i, v_i) Δt`.
pub fn path_length<M: MetricOracle + ?Sized>(path: &Path, oracle: &M) -> Result<f64> {
    let dt = path.dt();
    Ok(segment_norms(path, oracle)?
        .iter()
        .map(|g| g.max(0.0).sqrt())
        .sum::<f64>()
        * dt)
}

/// Gradient of [`path_energy`] with respect to the interior nodes `x_1 … x_{T-1}`.
///
/// Node `i` collects `G(m_{i-1}, v_{i-1}, ·) - G(m_i, v_i, ·)` from the kinetic
/// term and `(Δt/4)(D_{m_{i-1},·}G(v_{i-1}, v_{i-1}) + D_{m_i,·}G(v_i, v_i))` from
/// the metric variation. Without an analytic variation, `allow_fd` permits a
/// finite-difference fallback.
pub fn energy_gradient<M: MetricOracle + ?Sized>(
    path: &Path,
    oracle: &M,
    allow_fd: bool,
) -> Result<Vec<Vec<f64>>> {
    check_dim(oracle.dim(), path.dim())?;
    if !oracle.has_variation() && !allow_fd {
        return Err(Error::MissingVariation);
    }
    let t = path.n_steps();
    let dt = path.dt();
    let mut kinetic = Vec::with_capacity(t);
    let mut stretch = Vec::with_capacity(t);
    for i in 0..t {
        let (mid, vel) = path.segment(i);
        kinetic.push(oracle.metric_covector(&mid, &vel)?);
        stretch.push(if oracle.has_variation() {
            oracle.variation_covector(&mid, &vel)?
        } else {
            fd_variation_covector(oracle, &mid, &vel)?
        });
    }
    Ok((1..t)
        .map(|i| {
            (0..path.dim())
                .map(|j| {
                    kinetic[i - 1][j] - kinetic[i][j]
                        + 0.25 * dt * (stretch[i - 1][j] + stretch[i][j])
                })
                .collect()
        })
        .collect())
}

/// Options for [`bvp_minimize`].
#[derive(Debug, Clone)]
pub struct BvpOptions {
    /// Stop once the Euclidean norm of the energy gradient drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    /// Backtracking factor.
    pub shrink: f64,
    /// Precondition the descent direction with the inverse time Laplacian.
    pub precondition: bool,
    /// Allow finite-difference metric variations for oracles without one.
    pub allow_fd: bool,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20_000,
            c1: 1e-4,
            shrink: 0.5,
            precondition: true,
            allow_fd: false,
        }
    }
}

/// Relative energy change below which differences are treated as roundoff.
const ENERGY_RESOLUTION: f64 = 1e-12;

/// Solves `(1/Δt)·tridiag(-1, 2, -1) y = rhs` for each coordinate.
fn time_laplacian_solve(rhs: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = rhs.len();
    if n == 0 {
        return Vec::new();
    }
    let m = rhs[0].len();
    // Thomas algorithm with constant bands.
    let mut cp = vec![0.0; n];
    let mut denom = vec![0.0; n];
    denom[0] = 2.0;
    cp[0] = -1.0 / 2.0;
    for i in 1..n {
        denom[i] = 2.0 + cp[i - 1];
        cp[i] = -1.0 / denom[i];
    }
    let mut out = vec![vec![0.0; m]; n];
    for j in 0..m {
        let mut dp = vec![0.0; n];
        dp[0] = rhs[0][j] * dt / denom[0];
        for i in 1..n {
            dp[i] = (rhs[i][j] * dt + dp[i - 1]) / denom[i];
        }
        out[n - 1][j] = dp[n - 1];
        for i in (0..n - 1).rev() {
            out[i][j] = dp[i] - cp[i] * out[i + 1][j];
        }
    }
    out
}

fn flat_dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn displaced(path: &Path, dir: &[Vec<f64>], alpha: f64) -> Path {
    let mut points = path.points.clone();
    for (p, d) in points[1..].iter_mut().zip(dir) {
        for (a, b) in p.iter_mut().zip(d) {
            *a += alpha * b;
        }
    }
    Path { points }
}

/// Minimizes the path energy with fixed endpoints by gradient descent with
/// Armijo backtracking.
///
/// Near convergence the predicted decrease falls below floating-point
/// resolution of the energy; such trial steps are judged instead by the slope at
/// the trial point (no overshoot) and a drop in gradient norm.
pub fn bvp_minimize<M: MetricOracle + ?Sized>(
    x_start: &[f64],
    x_end: &[f64],
    oracle: &M,
    init: Path,
    opts: &BvpOptions,
) -> Result<(Path, GeodesicReport)> {
    check_dim(oracle.dim(), x_start.len())?;
    check_dim(oracle.dim(), x_end.len())?;
    check_dim(oracle.dim(), init.dim())?;
    let scale = 1.0 + max_abs(x_start).max(max_abs(x_end));
    let mismatch =
        |a: &[f64], b: &[f64]| a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * scale);
    if mismatch(init.start(), x_start) || mismatch(init.end(), x_end) {
        return Err(Error::ParameterViolation(
            "initial path does not match the endpoints".into(),
        ));
    }
    let dt = init.dt();
    let mut path = init;
    let mut energy = path_energy(&path, oracle)?;
    let mut grad = energy_gradient(&path, oracle, opts.allow_fd)?;
    let mut alpha: f64 = 1.0;
    let mut iterations = 0;
    let finish = |path: Path,
                  energy: f64,
                  grad_norm: f64,
                  iterations: usize,
                  converged: bool|
     -> Result<(Path, GeodesicReport)> {
        let length = path_length(&path, oracle)?;
        let report = GeodesicReport {
            energy,
            length,
            grad_norm,
            iterations,
            converged,
        };
        if converged {
            Ok((path, report))
        } else {
            Err(Error::NonConvergence(Box::new((path, report))))
        }
    };
    loop {
        let gnorm = flat_dot(&grad, &grad).sqrt();
        if gnorm < opts.tol {
            return finish(path, energy, gnorm, iterations, true);
        }
        if iterations >= opts.max_iter {
            return finish(path, energy, gnorm, iterations, false);
        }
        iterations += 1;
        let dir: Vec<Vec<f64>> = if opts.precondition {
            time_laplacian_solve(&grad, dt)
        } else {
            grad.clone()
        }
        .into_iter()
        .map(|v| v.into_iter().map(|a| -a).collect())
        .collect();
        let slope = flat_dot(&grad, &dir);
        alpha = (2.0 * alpha).min(1e12);
        let mut accepted = None;
        while alpha > 1e-20 {
            let trial = displaced(&path, &dir, alpha);
            if let Ok(e_trial) = path_energy(&trial, oracle) {
                let predicted = opts.c1 * alpha * slope;
                if predicted.abs() > ENERGY_RESOLUTION * energy.abs() {
                    if e_trial <= energy + predicted {
                        let g = energy_gradient(&trial, oracle, opts.allow_fd)?;
                        accepted = Some((trial, e_trial, g));
                        break;
                    }
                } else if e_trial <= energy + ENERGY_RESOLUTION * energy.abs() {
                    let g = energy_gradient(&trial, oracle, opts.allow_fd)?;
                    if flat_dot(&g, &dir) <= (2.0 * opts.c1 - 1.0) * slope
                        && flat_dot(&g, &g).sqrt() < gnorm
                    {
                        accepted = Some((trial, e_trial, g));
                        break;
                    }
                }
            }
            alpha *= opts.shrink;
        }
        match accepted {
            Some((p, e, g)) => {
                path = p;
                energy = e;
                grad = g;
            }
            None => return finish(path, energy, gnorm, iterations, false),
        }
    }
}

fn christoffel_acceleration<M: MetricOracle + ?Sized>(
    oracle: &M,
    x: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    let gram = oracle.gram(x)?;
    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &l| {
            (lo.min(l), hi.max(l.abs()))
        });
    let condition = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
    if condition > SINGULAR_GRAM_CONDITION {
        return Err(Error::SingularGram { condition });
    }
    let rhs = DVector::from_vec(oracle.christoffel_rhs(x, v)?);
    let gamma = gram
        .cholesky()
        .ok_or(Error::SingularGram { condition })?
        .solve(&rhs);
    Ok(gamma.iter().map(|g| -0.5 * g).collect())
}

/// Integrates `ẍ + Γ(x)(ẋ, ẋ) = 0` over `t ∈ [0, 1]` with the implicit
/// midpoint rule, solving for the Christoffel term in the full discrete basis.
pub fn ivp_shoot<M: MetricOracle + ?Sized>(
    x0: &[f64],
    v0: &[f64],
    oracle: &M,
    n_steps: usize,
) -> Result<Path> {
    let m = oracle.dim();
    check_dim(m, x0.len())?;
    check_dim(m, v0.len())?;
    if !oracle.has_variation() {
        return Err(Error::MissingVariation);
    }
    if n_steps == 0 {
        return Err(Error::ParameterViolation("n_steps must be positive".into()));
    }
    let h = 1.0 / n_steps as f64;
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut points = vec![x.clone()];
    for _ in 0..n_steps {
        let a0 = christoffel_acceleration(oracle, &x, &v)?;
        let mut xn: Vec<f64> = (0..m).map(|i| x[i] + h * v[i]).collect();
        let mut vn: Vec<f64> = (0..m).map(|i| v[i] + h * a0[i]).collect();
        let mut converged = false;
        for _ in 0..100 {
            let xm: Vec<f64> = (0..m).map(|i| 0.5 * (x[i] + xn[i])).collect();
            let vm: Vec<f64> = (0..m).map(|i| 0.5 * (v[i] + vn[i])).collect();
            let am = christoffel_acceleration(oracle, &xm, &vm)?;
            let x_next: Vec<f64> = (0..m).map(|i| x[i] + h * vm[i]).collect();
            let v_next: Vec<f64> = (0..m).map(|i| v[i] + h * am[i]).collect();
            let change = x_next
                .iter()
                .zip(&xn)
                .chain(v_next.iter().zip(&vn))
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            let size = 1.0 + max_abs(&x_next).max(max_abs(&v_next));
            xn = x_next;
            vn = v_next;
            if change <= 1e-14 * size {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::StepCollapse(
                "implicit midpoint iteration did not converge".into(),
            ));
        }
        x = xn;
        v = vn;
        points.push(x.clone());
    }
    Path::new(points)
}

/// How [`distance_estimate`] initializes and runs the boundary-value solve.
#[derive(Debug, Clone)]
pub struct DistanceStrategy {
    pub n_steps: usize,
    pub options: BvpOptions,
}

impl Default for DistanceStrategy {
    fn default() -> Self {
        Self {
            n_steps: 64,
            options: BvpOptions::default(),
        }
    }
}

/// Length of the minimized path from the straight-line initializer; an upper
/// bound on the geodesic distance.
pub fn distance_estimate<M: MetricOracle + ?Sized>(
    x: &[f64],
    y: &[f64],
    oracle: &M,
    strategy: &DistanceStrategy,
) -> Result<f64> {
    let init = Path::linear(x, y, strategy.n_steps)?;
    let (path, _) = bvp_minimize(x, y, oracle, init, &strategy.options)?;
    path_length(&path, oracle)
}
