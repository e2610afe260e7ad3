//! Kernel-induced metrics on landmark configurations.
//!
//! A scalar kernel `k` acts on ℝ^d-valued fields as `k(x, y)·I_d`. For
//! landmarks `q_1 … q_N` the induced metric is `G_q(h, h') = hᵀ K_q⁻¹ h'`
//! with `(K_q)_{ij} = k(q_i, q_j)`; `p = K_q⁻¹ h` are the momenta of the
//! minimal-norm field `X = Σ_i k(·, q_i) p_i` with `X(q_i) = h_i`.
//!
//! Gram matrices are factored without regularization: a failed factorization
//! is reported, never smoothed over.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::geodesics::{dot, fd_variation, MetricOracle};

/// Landmarks closer than this are treated as coincident.
pub const MIN_SEPARATION: f64 = 1e-8;

/// Translation-invariant isotropic scalar kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(-r² / 2σ²)`.
    Gaussian { sigma: f64 },
    /// Green's function of `(Id - ℓ²Δ)^order` in one dimension, `order ∈ {1, 2}`:
    /// `½ e^{-r/ℓ}` and `¼ (1 + r/ℓ) e^{-r/ℓ}`.
    Sobolev { order: u32, scale: f64 },
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::ParameterViolation(format!(
                "Gaussian width must be positive, got {sigma}"
            )));
        }
        Ok(Kernel::Gaussian { sigma })
    }

    pub fn sobolev(order: u32, scale: f64) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::ParameterViolation(format!(
                "kernel scale must be positive, got {scale}"
            )));
        }
        Ok(Kernel::Sobolev { order, scale })
    }

    /// Profile `k(r)` as a function of distance.
    pub fn profile(&self, r: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma } => (-r * r / (2.0 * sigma * sigma)).exp(),
            Kernel::Sobolev { order: 1, scale } => 0.5 * (-r / scale).exp(),
            Kernel::Sobolev { scale, .. } => 0.25 * (1.0 + r / scale) * (-r / scale).exp(),
        }
    }

    /// `k(0)`, the square of the RKHS sup-norm constant.
    pub fn at_zero(&self) -> f64 {
        self.profile(0.0)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.profile(distance(x, y))
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One-dimensional Sobolev kernel of order `n` with unit scale.
pub fn sobolev_kernel_eval(n: u32, x: f64, y: f64) -> Result<f64> {
    Ok(Kernel::sobolev(n, 1.0)?.profile((x - y).abs()))
}

/// `N ≥ 1` pairwise distinct points in ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkConfig {
    d: usize,
    points: Vec<Vec<f64>>,
}

impl LandmarkConfig {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::DegenerateConfig("no landmarks".into()))?;
        if d == 0 {
            return Err(Error::DegenerateConfig("zero-dimensional landmarks".into()));
        }
        for p in &points {
            check_dim(d, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("landmark"));
            }
        }
        let cfg = Self { d, points };
        let sep = cfg.min_separation();
        if sep <= MIN_SEPARATION {
            return Err(Error::DegenerateConfig(format!("landmarks {sep:e} apart")));
        }
        Ok(cfg)
    }

    /// From point-major coordinates `[q_1, …, q_N]`.
    pub fn from_flat(d: usize, flat: &[f64]) -> Result<Self> {
        if d == 0 || flat.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: flat.len(),
            });
        }
        Self::new(flat.chunks(d).map(<[f64]>::to_vec).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Smallest pairwise distance, `∞` for a single landmark.
    pub fn min_separation(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| distance(&self.points[i], &self.points[j]))
            .fold(f64::INFINITY, f64::min)
    }

    fn check_vectors(&self, h: &[Vec<f64>]) -> Result<()> {
        check_dim(self.len(), h.len())?;
        h.iter().try_for_each(|v| check_dim(self.d, v.len()))
    }
}

/// The scalar matrix `k(q_i, q_j)` and its Cholesky factor.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    scalar: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    d: usize,
}

/// Assembles and factors the Gram matrix of `q`.
pub fn gram_assemble(kernel: &Kernel, q: &LandmarkConfig) -> Result<GramMatrix> {
    let n = q.len();
    let scalar = DMatrix::from_fn(n, n, |i, j| kernel.eval(&q.points[i], &q.points[j]));
    let chol = scalar
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateConfig("Gram matrix is not positive definite".into()))?;
    Ok(GramMatrix {
        scalar,
        chol,
        d: q.d,
    })
}

impl GramMatrix {
    pub fn scalar(&self) -> &DMatrix<f64> {
        &self.scalar
    }

    /// The `Nd × Nd` block matrix `k(q_i, q_j) I_d`, point-major.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, d) = (self.scalar.nrows(), self.d);
        DMatrix::from_fn(n * d, n * d, |r, c| {
            if r % d == c % d {
                self.scalar[(r / d, c / d)]
            } else {
                0.0
            }
        })
    }

    /// Eigenvalues of the scalar block, ascending; the dense matrix repeats each `d` times.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.scalar.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `K⁻¹ h` applied to each coordinate.
    pub fn solve(&self, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.scalar.nrows();
        let rhs = DMatrix::from_fn(n, self.d, |i, a| h[i][a]);
        let p = self.chol.solve(&rhs);
        (0..n)
            .map(|i| (0..self.d).map(|a| p[(i, a)]).collect())
            .collect()
    }
}

/// Momenta `p_i` dual to a landmark tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum(pub Vec<Vec<f64>>);

/// A finite kernel expansion `X(x) = Σ_i k(x, c_i) p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField {
    pub kernel: Kernel,
    pub centers: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
}

impl KernelField {
    pub fn new(kernel: Kernel, centers: Vec<Vec<f64>>, momenta: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(centers.len(), momenta.len())?;
        let d = centers.first().map_or(0, Vec::len);
        for (c, p) in centers.iter().zip(&momenta) {
            check_dim(d, c.len())?;
            check_dim(d, p.len())?;
        }
        Ok(Self {
            kernel,
            centers,
            momenta,
        })
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (c, p) in self.centers.iter().zip(&self.momenta) {
            let w = self.kernel.eval(x, c);
            for (o, v) in out.iter_mut().zip(p) {
                *o += w * v;
            }
        }
        out
    }

    /// RKHS inner product `Σ_{i,j} k(c_i, c'_j) ⟨p_i, p'_j⟩`.
    pub fn rkhs_inner(&self, other: &KernelField) -> Result<f64> {
        if self.kernel != other.kernel {
            return Err(Error::ParameterViolation(
                "fields expanded in different kernels".into(),
            ));
        }
        let mut s = 0.0;
        for (c, p) in self.centers.iter().zip(&self.momenta) {
            for (c2, p2) in other.centers.iter().zip(&other.momenta) {
                s += self.kernel.eval(c, c2) * dot(p, p2);
            }
        }
        Ok(s)
    }

    /// `self - other` as a single expansion over both center sets.
    pub fn difference(&self, other: &KernelField) -> Result<KernelField> {
        if self.kernel != other.kernel {
            return Err(Error::ParameterViolation(
                "fields expanded in different kernels".into(),
            ));
        }
        let centers = self.centers.iter().chain(&other.centers).cloned().collect();
        let momenta = self
            .momenta
            .iter()
            .cloned()
            .chain(other.momenta.iter().map(|p| p.iter().map(|v| -v).collect()))
            .collect();
        KernelField::new(self.kernel, centers, momenta)
    }
}

/// Minimal-norm field with `X(q_i) = h_i`.
pub fn horizontal_lift(
    kernel: &Kernel,
    q: &LandmarkConfig,
    h: &[Vec<f64>],
) -> Result<(Momentum, KernelField)> {
    q.check_vectors(h)?;
    let p = gram_assemble(kernel, q)?.solve(h);
    let field = KernelField::new(*kernel, q.points.clone(), p.clone())?;
    Ok((Momentum(p), field))
}

/// `hᵀ K_q⁻¹ h'`.
pub fn induced_metric(
    kernel: &Kernel,
    q: &LandmarkConfig,
    h: &[Vec<f64>],
    h2: &[Vec<f64>],
) -> Result<f64> {
    q.check_vectors(h)?;
    q.check_vectors(h2)?;
    let p = gram_assemble(kernel, q)?.solve(h);
    Ok(p.iter().zip(h2).map(|(a, b)| dot(a, b)).sum())
}

/// Splitting of a kernel expansion into its part horizontal over `q` and a
/// remainder vanishing on `q`.
#[derive(Debug, Clone)]
pub struct VerticalSplit {
    pub horizontal: KernelField,
    pub vertical: KernelField,
    /// `⟨X^hor, X^ver⟩_H`, zero up to roundoff.
    pub cross: f64,
}

pub fn vertical_project(
    kernel: &Kernel,
    q: &LandmarkConfig,
    field: &KernelField,
) -> Result<VerticalSplit> {
    if field.kernel != *kernel {
        return Err(Error::ParameterViolation(
            "field is not an expansion in this kernel".into(),
        ));
    }
    if !field.centers.is_empty() {
        check_dim(q.dim(), field.dim())?;
    }
    let values: Vec<Vec<f64>> = q.points.iter().map(|x| field.eval(x)).collect();
    let (_, horizontal) = horizontal_lift(kernel, q, &values)?;
    let vertical = field.difference(&horizontal)?;
    let cross = horizontal.rkhs_inner(&vertical)?;
    Ok(VerticalSplit {
        horizontal,
        vertical,
        cross,
    })
}

/// `(max_i |h_i|, √k(0) · √G_q(h, h))`; the first never exceeds the second.
pub fn admissibility_bound_check(
    kernel: &Kernel,
    q: &LandmarkConfig,
    h: &[Vec<f64>],
) -> Result<(f64, f64)> {
    let g = induced_metric(kernel, q, h, h)?;
    let lhs = h.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    Ok((lhs, kernel.at_zero().sqrt() * g.max(0.0).sqrt()))
}

/// Induced landmark metric on point-major coordinates `[q_1, …, q_N] ∈ ℝ^{Nd}`.
///
/// The metric variation `D_{q,l}G(h, k) = -p_hᵀ (D_l K) p_k` is analytic for
/// the Gaussian kernel and uses finite differences otherwise.
#[derive(Debug, Clone, Copy)]
pub struct LandmarkOracle {
    kernel: Kernel,
    n: usize,
    d: usize,
}

impl LandmarkOracle {
    pub fn new(kernel: Kernel, n: usize, d: usize) -> Self {
        Self { kernel, n, d }
    }

    fn split(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.n * self.d, v.len())?;
        Ok(v.chunks(self.d).map(<[f64]>::to_vec).collect())
    }

    fn setup(&self, x: &[f64]) -> Result<(LandmarkConfig, GramMatrix)> {
        let q = LandmarkConfig::from_flat(self.d, x)?;
        check_dim(self.n, q.len())?;
        let g = gram_assemble(&self.kernel, &q)?;
        Ok((q, g))
    }

    /// `∇_x k(x - y)` for the Gaussian kernel.
    fn gaussian_gradient(sigma: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let w = (-distance(x, y).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * sigma);
        x.iter().zip(y).map(|(a, b)| -w * (a - b)).collect()
    }
}

impl MetricOracle for LandmarkOracle {
    fn dim(&self) -> usize {
        self.n * self.d
    }

    fn inner(&self, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let (_, g) = self.setup(x)?;
        let p = g.solve(&self.split(h)?);
        Ok(p.concat().iter().zip(k).map(|(a, b)| a * b).sum())
    }

    fn has_variation(&self) -> bool {
        true
    }

    fn variation(&self, x: &[f64], l: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let Kernel::Gaussian { sigma } = self.kernel else {
            return fd_variation(&EvalOnly(*self), x, l, h, k);
        };
        let (q, g) = self.setup(x)?;
        let ph = g.solve(&self.split(h)?);
        let pk = g.solve(&self.split(k)?);
        let l = self.split(l)?;
        let pts = q.points();
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let grad = Self::gaussian_gradient(sigma, &pts[i], &pts[j]);
                let dl: Vec<f64> = l[i].iter().zip(&l[j]).map(|(a, b)| a - b).collect();
                s += dot(&ph[i], &pk[j]) * dot(&grad, &dl);
            }
        }
        Ok(-s)
    }

    fn metric_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let (_, g) = self.setup(x)?;
        Ok(g.solve(&self.split(v)?).concat())
    }

    /// `e_i ↦ -2 Σ_j ⟨p_i, p_j⟩ ∇k(q_i - q_j)` for the Gaussian kernel.
    fn variation_covector(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let Kernel::Gaussian { sigma } = self.kernel else {
            let mut e = vec![0.0; self.dim()];
            return (0..self.dim())
                .map(|j| {
                    e[j] = 1.0;
                    let r = self.variation(x, &e, v, v);
                    e[j] = 0.0;
                    r
                })
                .collect();
        };
        let (q, g) = self.setup(x)?;
        let p = g.solve(&self.split(v)?);
        let pts = q.points();
        let mut out = vec![0.0; self.dim()];
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j {
                    continue;
                }
                let w = -2.0 * dot(&p[i], &p[j]);
                for (a, gr) in Self::gaussian_gradient(sigma, &pts[i], &pts[j])
                    .into_iter()
                    .enumerate()
                {
                    out[i * self.d + a] += w * gr;
                }
            }
        }
        Ok(out)
    }
}

/// The landmark metric without its variation, for finite differencing.
struct EvalOnly(LandmarkOracle);

impl MetricOracle for EvalOnly {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn inner(&self, x: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        self.0.inner(x, h, k)
    }
}
