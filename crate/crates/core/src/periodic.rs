//! Smooth periodic functions on the circle.
//!
//! A [`PeriodicFunction`] stores `d` components sampled on a uniform grid of
//! `n` nodes `θ_j = 2πj/n`. Fourier coefficients use the normalization
//!
//! ```text
//! f̂_k = (1/2π) ∫ f(θ) e^{-ikθ} dθ  ≈  (1/n) Σ_j f(θ_j) e^{-ikθ_j}
//! ```
//!
//! with wavenumbers `k ∈ {-n/2+1, …, n/2}`. Sobolev pairings are plain mode
//! sums with weight `(1+k²)^q`, so `⟨1, 1⟩_{H^q} = 1` for every `q`.
//!
//! All spectral operations assume the input is band-limited to roughly `n/4`;
//! nothing here de-aliases.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_dim, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Uniform grid on `[0, 2π)` with a power-of-two number of nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicGrid {
    n: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Wavenumber stored at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// FFT index holding wavenumber `k`, if it is represented on this grid.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k > half || k <= -half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// `(Σ_k (1+k²)^{-q})^{1/2}` over the represented modes: the constant in
    /// `sup|f| ≤ C_q ‖f‖_{H^q}`.
    pub fn embedding_constant(&self, q: f64) -> f64 {
        (0..self.n)
            .map(|i| {
                let k = self.wavenumber(i) as f64;
                (1.0 + k * k).powf(-q)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A `d`-valued function on the circle, stored as samples on a [`PeriodicGrid`].
///
/// Values are component-major: component `c` occupies
/// `values[c*n .. (c+1)*n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunction {
    grid: PeriodicGrid,
    dim: usize,
    values: Vec<f64>,
}

impl PeriodicFunction {
    pub fn from_values(grid: PeriodicGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        check_dim(grid.len() * dim, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("periodic function samples"));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn from_components(grid: PeriodicGrid, components: &[Vec<f64>]) -> Result<Self> {
        let values: Vec<f64> = components.iter().flatten().copied().collect();
        Self::from_values(grid, components.len(), values)
    }

    /// Sample `f(θ, out)` at every node; `out` has length `dim`.
    pub fn from_fn(grid: PeriodicGrid, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let n = grid.len();
        let mut values = vec![0.0; n * dim];
        let mut buf = vec![0.0; dim];
        for j in 0..n {
            f(grid.node(j), &mut buf);
            for c in 0..dim {
                values[c * n + j] = buf[c];
            }
        }
        Self::from_values(grid, dim, values)
    }

    pub fn from_scalar_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(grid, 1, grid.nodes().into_iter().map(f).collect())
    }

    pub fn zeros(grid: PeriodicGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.len() * dim],
        }
    }

    pub fn constant(grid: PeriodicGrid, value: &[f64]) -> Self {
        let n = grid.len();
        let values = value
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, n))
            .collect();
        Self {
            grid,
            dim: value.len(),
            values,
        }
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[c * n..(c + 1) * n]
    }

    /// The `d`-vector at node `j`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let n = self.grid.len();
        (0..self.dim).map(|c| self.values[c * n + j]).collect()
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.len(), other.grid.len()));
        }
        check_dim(self.dim, other.dim)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            values,
        })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(
            self.grid,
            self.dim,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn transform(&self) -> SpectralCoeffs {
        transform(self)
    }

    pub fn derivative(&self, order: u32) -> Self {
        derivative(self, order)
    }

    /// Trigonometric interpolant through the samples.
    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(self)
    }
}

/// Complex Fourier coefficients, one block of `n` per component in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    grid: PeriodicGrid,
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn from_coeffs(grid: PeriodicGrid, dim: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_dim(grid.len() * dim, coeffs.len())?;
        Ok(Self { grid, dim, coeffs })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of wavenumber `k` in `component`; zero if `k` is not represented.
    pub fn coeff(&self, component: usize, k: i64) -> Complex64 {
        match self.grid.index_of(k) {
            Some(idx) => self.coeffs[component * self.grid.len() + idx],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Coefficients of one component in FFT order.
    pub fn component(&self, component: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.coeffs[component * n..(component + 1) * n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }
}

pub fn transform(f: &PeriodicFunction) -> SpectralCoeffs {
    let n = f.grid.len();
    let plan = forward_plan(n);
    let scale = 1.0 / n as f64;
    let mut coeffs: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for chunk in coeffs.chunks_mut(n) {
        plan.process(chunk);
        for c in chunk.iter_mut() {
            *c *= scale;
        }
    }
    SpectralCoeffs {
        grid: f.grid,
        dim: f.dim,
        coeffs,
    }
}

/// Inverse of [`transform`]; imaginary parts of the synthesized samples are discarded.
pub fn inverse_transform(s: &SpectralCoeffs) -> PeriodicFunction {
    let n = s.grid.len();
    let plan = inverse_plan(n);
    let mut buf = s.coeffs.clone();
    for chunk in buf.chunks_mut(n) {
        plan.process(chunk);
    }
    PeriodicFunction {
        grid: s.grid,
        dim: s.dim,
        values: buf.into_iter().map(|c| c.re).collect(),
    }
}

/// Spectral differentiation `f̂_k ↦ (ik)^order f̂_k`.
///
/// The Nyquist mode is dropped for odd orders so the result stays real.
pub fn derivative(f: &PeriodicFunction, order: u32) -> PeriodicFunction {
    if order == 0 {
        return f.clone();
    }
    let mut s = transform(f);
    let grid = s.grid;
    let n = grid.len();
    let i_pow = Complex64::new(0.0, 1.0).powu(order);
    for chunk in s.coeffs.chunks_mut(n) {
        for (idx, c) in chunk.iter_mut().enumerate() {
            if order % 2 == 1 && idx == n / 2 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let k = grid.wavenumber(idx) as f64;
            *c *= i_pow * k.powi(order as i32);
        }
    }
    inverse_transform(&s)
}

fn check_order(q: f64) -> Result<()> {
    if q < 0.0 || !q.is_finite() {
        Err(Error::NegativeOrder(q))
    } else {
        Ok(())
    }
}

fn weighted_mode_sum(
    f: &PeriodicFunction,
    g: &PeriodicFunction,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let fs = transform(f);
    let gs = transform(g);
    let grid = f.grid;
    fs.coeffs
        .iter()
        .zip(&gs.coeffs)
        .enumerate()
        .map(|(i, (a, b))| {
            let k = grid.wavenumber(i % grid.len()) as f64;
            weight(k) * (a * b.conj()).re
        })
        .sum()
}

/// `Σ_components Σ_k (1+k²)^q Re(f̂_k conj(ĝ_k))`.
pub fn sobolev_inner_product(f: &PeriodicFunction, g: &PeriodicFunction, q: f64) -> Result<f64> {
    f.check_compatible(g)?;
    check_order(q)?;
    Ok(weighted_mode_sum(f, g, |k| (1.0 + k * k).powf(q)))
}

/// Derivative form `(1/2π) ∫ f·g + f^{(q)}·g^{(q)} dθ`.
///
/// At `q = 0` the top-order term coincides with the zeroth-order one, and the
/// pairing is taken to be the plain `(1/2π)` L² product.
pub fn sobolev_inner_product_integer(
    f: &PeriodicFunction,
    g: &PeriodicFunction,
    q: u32,
) -> Result<f64> {
    f.check_compatible(g)?;
    let n = f.grid.len() as f64;
    let l2: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n;
    if q == 0 {
        return Ok(l2);
    }
    let fq = derivative(f, q);
    let gq = derivative(g, q);
    let top: f64 = fq
        .values
        .iter()
        .zip(&gq.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n;
    Ok(l2 + top)
}

pub fn sobolev_norm(f: &PeriodicFunction, q: f64) -> Result<f64> {
    Ok(sobolev_inner_product(f, f, q)?.max(0.0).sqrt())
}

/// Sample-wise product of two scalar functions.
pub fn pointwise_multiply(f: &PeriodicFunction, g: &PeriodicFunction) -> Result<PeriodicFunction> {
    check_dim(1, f.dim)?;
    f.check_compatible(g)?;
    let values = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    Ok(PeriodicFunction {
        grid: f.grid,
        dim: 1,
        values,
    })
}

/// Largest Euclidean norm of the `d`-vector over the nodes.
pub fn sup_norm(f: &PeriodicFunction) -> f64 {
    let n = f.grid.len();
    (0..n)
        .map(|j| {
            (0..f.dim)
                .map(|c| f.values[c * n + j].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Evaluates the trigonometric interpolant of a [`PeriodicFunction`] anywhere on ℝ.
///
/// The Nyquist mode is split symmetrically, so the interpolant is real.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    n: usize,
    dim: usize,
    /// Per component: `[f̂_0, 2f̂_1, …, 2f̂_{n/2-1}, f̂_{n/2}]`.
    half: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(f: &PeriodicFunction) -> Self {
        let s = transform(f);
        let n = f.grid.len();
        let m = n / 2 + 1;
        let mut half = Vec::with_capacity(m * f.dim);
        for c in 0..f.dim {
            let comp = s.component(c);
            for k in 0..m {
                let factor = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                half.push(comp[k] * factor);
            }
        }
        Self {
            n,
            dim: f.dim,
            half,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All components at `x`, written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let m = self.n / 2 + 1;
        let z = Complex64::new(x.cos(), x.sin());
        out[..self.dim].fill(0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        for k in 0..m {
            if k == self.n / 2 {
                // exact cosine for the Nyquist term
                let c = ((self.n / 2) as f64 * x).cos();
                for (comp, o) in out.iter_mut().enumerate().take(self.dim) {
                    *o += self.half[comp * m + k].re * c;
                }
            } else {
                for (comp, o) in out.iter_mut().enumerate().take(self.dim) {
                    *o += (self.half[comp * m + k] * zk).re;
                }
            }
            zk *= z;
            if k % 16 == 15 {
                // resynchronize the recurrence
                let kk = (k + 1) as f64;
                zk = Complex64::new((kk * x).cos(), (kk * x).sin());
            }
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// First component at `x`.
    pub fn eval_scalar(&self, x: f64) -> f64 {
        let m = self.n / 2 + 1;
        let z = Complex64::new(x.cos(), x.sin());
        let mut acc = 0.0;
        let mut zk = Complex64::new(1.0, 0.0);
        for k in 0..m {
            if k == self.n / 2 {
                acc += self.half[k].re * ((self.n / 2) as f64 * x).cos();
            } else {
                acc += (self.half[k] * zk).re;
            }
            zk *= z;
            if k % 16 == 15 {
                let kk = (k + 1) as f64;
                zk = Complex64::new((kk * x).cos(), (kk * x).sin());
            }
        }
        acc
    }

    /// Resample at arbitrary points, producing a function on `grid`.
    pub fn resample(&self, grid: PeriodicGrid, points: &[f64]) -> Result<PeriodicFunction> {
        check_dim(grid.len(), points.len())?;
        let n = grid.len();
        let mut values = vec![0.0; n * self.dim];
        let mut buf = vec![0.0; self.dim];
        for (j, &x) in points.iter().enumerate() {
            self.eval_into(x, &mut buf);
            for c in 0..self.dim {
                values[c * n + j] = buf[c];
            }
        }
        PeriodicFunction::from_values(grid, self.dim, values)
    }
}
