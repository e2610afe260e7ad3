//! Finite truncations of the Hilbert sphere and of Grossman's ellipsoid.
//!
//! Points live in ℝ^m. The sphere oracle works in the chart
//! `u_{x0}(x) = x - ⟨x, x0⟩ x0`, expressed in an orthonormal basis of `x0^⊥`;
//! the ellipsoid oracle pulls back `⟨A ·, A ·⟩` through stereographic
//! coordinates, so both expose flat coordinate vectors to the solvers.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::geodesics::{dot, norm, MetricOracle, Path};

const UNIT_TOLERANCE: f64 = 1e-10;

fn check_unit(x: &[f64]) -> Result<()> {
    let r = norm(x);
    if (r - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnit(r));
    }
    Ok(())
}

/// `u_{x0}(x) = x - ⟨x, x0⟩ x0` for unit `x` with `⟨x, x0⟩ > 0`.
pub fn sphere_chart(x0: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_dim(x0.len(), x.len())?;
    check_unit(x0)?;
    check_unit(x)?;
    let c = dot(x, x0);
    if c <= 0.0 {
        return Err(Error::OutOfChart(c));
    }
    Ok(x.iter().zip(x0).map(|(a, b)| a - c * b).collect())
}

/// `y ↦ y + √(1 - ‖y‖²) x0` for `‖y‖ < 1`, `y ⟂ x0`.
pub fn sphere_chart_inverse(x0: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim(x0.len(), y.len())?;
    check_unit(x0)?;
    let r2 = dot(y, y);
    let off = dot(y, x0);
    if r2 >= 1.0 || off.abs() > 1e-12 {
        return Err(Error::OutOfChart(off));
    }
    let s = (1.0 - r2).sqrt();
    Ok(y.iter().zip(x0).map(|(a, b)| a + s * b).collect())
}

/// Great-circle distance `arccos ⟨x, y⟩`.
pub fn sphere_distance_analytic(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    check_unit(x)?;
    check_unit(y)?;
    Ok(dot(x, y).clamp(-1.0, 1.0).acos())
}

/// Orthonormal basis of `x0^⊥` as the columns of an `m × (m-1)` matrix,
/// taken from the Householder reflection mapping `x0` to a coordinate axis.
fn complement_basis(x0: &[f64]) -> DMatrix<f64> {
    let m = x0.len();
    // reflect onto ±e_p where p maximizes |x0_p|, keeping the reflection well conditioned
    let p = (0..m).fold(0, |b, i| if x0[i].abs() > x0[b].abs() { i } else { b });
    let sign = if x0[p] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = DVector::from_column_slice(x0);
    w[p] += sign;
    let wn2 = w.norm_squared();
    let h = DMatrix::identity(m, m) - (&w * w.transpose()) * (2.0 / wn2);
    // columns of H are orthonormal and H e_p = -sign·x0, so the others span x0^⊥
    let cols: Vec<_> = (0..m)
        .filter(|&i| i != p)
        .map(|i| h.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// The unit sphere in ℝ^m through the chart centred at `x0`.
///
/// Coordinates `z ∈ ℝ^{m-1}` with `|z| < 1`; the metric is
/// `G_z(h, k) = ⟨h, k⟩ + ⟨z, h⟩⟨z, k⟩ / (1 - |z|²)`.
#[derive(Debug, Clone)]
pub struct SphereOracle {
    x0: Vec<f64>,
    basis: DMatrix<f64>,
}

impl SphereOracle {
    pub fn new(x0: &[f64]) -> Result<Self> {
        if x0.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: x0.len(),
            });
        }
        check_unit(x0)?;
        Ok(Self {
            x0: x0.to_vec(),
            basis: complement_basis(x0),
        })
    }

    /// Chart centred at the normalized midpoint of `x` and `y`.
    pub fn centred_between(x: &[f64], y: &[f64]) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let r = norm(&mid);
        if r < 1e-8 {
            return Err(Error::OutOfChart(dot(x, y)));
        }
        Self::new(&mid.iter().map(|v| v / r).collect::<Vec<_>>())
    }

    pub fn ambient_dim(&self) -> usize {
        self.x0.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.x0
    }

    /// Coordinates of a unit vector in the chart domain.
    pub fn to_chart(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = sphere_chart(&self.x0, x)?;
        Ok((self.basis.transpose() * DVector::from_vec(y))
            .as_slice()
            .to_vec())
    }

    pub fn from_chart(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        let y = &self.basis * DVector::from_column_slice(z);
        sphere_chart_inverse(&self.x0, y.as_slice())
    }

    /// Chart image of an ambient tangent vector at a chart-domain point.
    pub fn tangent_to_chart(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.ambient_dim(), v.len())?;
        Ok((self.basis.transpose() * DVector::from_column_slice(v))
            .as_slice()
            .to_vec())
    }

    fn denom(&self, z: &[f64]) -> Result<f64> {
        let q = 1.0 - dot(z, z);
        if q <= 0.0 {
            return Err(Error::OutOfChart(q));
        }
        Ok(q)
    }
}

impl MetricOracle for SphereOracle {
    fn dim(&self) -> usize {
        self.x0.len() - 1
    }

    fn inner(&self, z: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let q = self.denom(z)?;
        Ok(dot(h, k) + dot(z, h) * dot(z, k) / q)
    }

    fn has_variation(&self) -> bool {
        true
    }

    fn variation(&self, z: &[f64], l: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        let q = self.denom(z)?;
        let (zl, zh, zk) = (dot(z, l), dot(z, h), dot(z, k));
        Ok((dot(l, h) * zk + zh * dot(l, k)) / q + 2.0 * zl * zh * zk / (q * q))
    }

    fn metric_covector(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let q = self.denom(z)?;
        let zv = dot(z, v);
        Ok(v.iter().zip(z).map(|(a, b)| a + zv * b / q).collect())
    }

    fn variation_covector(&self, z: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let q = self.denom(z)?;
        let zv = dot(z, v);
        // e ↦ 2⟨e, v⟩⟨z, v⟩/q + 2⟨z, e⟩⟨z, v⟩²/q²
        Ok(v.iter()
            .zip(z)
            .map(|(a, b)| 2.0 * a * zv / q + 2.0 * b * zv * zv / (q * q))
            .collect())
    }
}

/// Semi-axes `a_0 = 1`, `a_n = 1 + 2^{-n}` of Grossman's ellipsoid in ℝ^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EllipsoidSpec {
    m: usize,
}

impl Default for EllipsoidSpec {
    fn default() -> Self {
        Self { m: 24 }
    }
}

impl EllipsoidSpec {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::ParameterViolation(format!(
                "ellipsoid needs m >= 2, got {m}"
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn semi_axis(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            1.0 + 0.5f64.powi(n as i32)
        }
    }

    pub fn semi_axes(&self) -> Vec<f64> {
        (0..self.m).map(|n| self.semi_axis(n)).collect()
    }
}

/// `F(Σ x_n e_n) = Σ a_n x_n e_n`.
pub fn ellipsoid_map(spec: &EllipsoidSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.dim(), x.len())?;
    Ok(x.iter()
        .enumerate()
        .map(|(n, v)| spec.semi_axis(n) * v)
        .collect())
}

pub fn ellipsoid_map_inverse(spec: &EllipsoidSpec, y: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.dim(), y.len())?;
    Ok(y.iter()
        .enumerate()
        .map(|(n, v)| v / spec.semi_axis(n))
        .collect())
}

/// `Len(F c)` for a sampled path on the sphere: nodes are renormalized and
/// each segment contributes `‖A (x_{i+1} - x_i)‖`.
pub fn ellipsoid_path_length(spec: &EllipsoidSpec, path: &Path) -> Result<f64> {
    check_dim(spec.dim(), path.dim())?;
    let a = spec.semi_axes();
    let unit: Vec<Vec<f64>> = path
        .points()
        .iter()
        .map(|p| {
            let r = norm(p);
            p.iter().map(|v| v / r).collect()
        })
        .collect();
    Ok(unit
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .zip(&a)
                .map(|((x, y), s)| (s * (y - x)).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum())
}

/// Half great circle `cos(πs) e_0 + sin(πs) e_n`, `s ∈ [0, 1]`.
pub fn half_great_circle(m: usize, n: usize, n_steps: usize) -> Result<Path> {
    if n == 0 || n >= m {
        return Err(Error::ParameterViolation(format!(
            "plane index {n} outside 1..{m}"
        )));
    }
    let points = (0..=n_steps)
        .map(|i| {
            let s = PI * i as f64 / n_steps as f64;
            let mut p = vec![0.0; m];
            p[0] = s.cos();
            p[n] = s.sin();
            p
        })
        .collect();
    Path::new(points)
}

/// Nodes of the periodic trapezoid rule for [`half_circle_image_length`].
pub const GROSSMAN_QUADRATURE_NODES: usize = 1024;

/// `π ∫₀¹ √(sin²πs + a² cos²πs) ds` by the trapezoid rule with `nodes` points.
///
/// The integrand is smooth and 1-periodic, so the rule converges geometrically.
pub fn half_circle_image_length(a: f64, nodes: usize) -> f64 {
    let sum: f64 = (0..nodes)
        .map(|i| {
            let s = PI * i as f64 / nodes as f64;
            (s.sin().powi(2) + a * a * s.cos().powi(2)).sqrt()
        })
        .sum();
    PI * sum / nodes as f64
}

/// Row of the Grossman table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrossmanRow {
    pub n: usize,
    pub length: f64,
    /// `(1 + 2^{-n}) π`.
    pub bound: f64,
}

/// Lengths of `F` applied to the half great circles in the `(e_0, e_n)` planes.
pub fn grossman_experiment(spec: &EllipsoidSpec, n_list: &[usize]) -> Result<Vec<GrossmanRow>> {
    n_list
        .iter()
        .map(|&n| {
            if n == 0 || n >= spec.dim() {
                return Err(Error::ParameterViolation(format!(
                    "n = {n} outside 1..{}",
                    spec.dim()
                )));
            }
            let a = spec.semi_axis(n);
            Ok(GrossmanRow {
                n,
                length: half_circle_image_length(a, GROSSMAN_QUADRATURE_NODES),
                bound: a * PI,
            })
        })
        .collect()
}

/// Grossman's ellipsoid `F(S)` in stereographic coordinates on the sphere,
/// projecting from `-e_{m-1}`:
///
/// ```text
/// x_i = 2 z_i / s (i < m-1),   x_{m-1} = 2/s - 1,   s = 1 + |z|²
/// ```
///
/// with metric `G_z(h, k) = ⟨A J h, A J k⟩`, `J = ∂x/∂z`.
#[derive(Debug, Clone)]
pub struct EllipsoidOracle {
    axes: Vec<f64>,
}

impl EllipsoidOracle {
    pub fn new(spec: &EllipsoidSpec) -> Self {
        Self {
            axes: spec.semi_axes(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.axes.len()
    }

    pub fn to_sphere(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        let s = 1.0 + dot(z, z);
        let mut x: Vec<f64> = z.iter().map(|v| 2.0 * v / s).collect();
        x.push(2.0 / s - 1.0);
        Ok(x)
    }

    /// Stereographic coordinates of a unit vector other than the pole.
    pub fn from_sphere(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.ambient_dim(), x.len())?;
        check_unit(x)?;
        let last = x[x.len() - 1];
        if 1.0 + last < 1e-12 {
            return Err(Error::OutOfChart(last));
        }
        Ok(x[..x.len() - 1].iter().map(|v| v / (1.0 + last)).collect())
    }

    /// `A J v`.
    fn push(&self, z: &[f64], v: &[f64]) -> Vec<f64> {
        let s = 1.0 + dot(z, z);
        let zv = dot(z, v);
        let m1 = z.len();
        let mut out: Vec<f64> = (0..m1)
            .map(|i| self.axes[i] * (2.0 * v[i] / s - 4.0 * z[i] * zv / (s * s)))
            .collect();
        out.push(self.axes[m1] * (-4.0 * zv / (s * s)));
        out
    }

    /// `A (D_l J) v`.
    fn push_variation(&self, z: &[f64], l: &[f64], v: &[f64]) -> Vec<f64> {
        let s = 1.0 + dot(z, z);
        let (zv, zl, lv) = (dot(z, v), dot(z, l), dot(l, v));
        let (s2, s3) = (s * s, s * s * s);
        let m1 = z.len();
        let mut out: Vec<f64> = (0..m1)
            .map(|i| {
                self.axes[i]
                    * (-4.0 * zl * v[i] / s2 - 4.0 * (l[i] * zv + z[i] * lv) / s2
                        + 16.0 * z[i] * zv * zl / s3)
            })
            .collect();
        out.push(self.axes[m1] * (-4.0 * lv / s2 + 16.0 * zv * zl / s3));
        out
    }
}

impl MetricOracle for EllipsoidOracle {
    fn dim(&self) -> usize {
        self.axes.len() - 1
    }

    fn inner(&self, z: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        Ok(dot(&self.push(z, h), &self.push(z, k)))
    }

    fn has_variation(&self) -> bool {
        true
    }

    fn variation(&self, z: &[f64], l: &[f64], h: &[f64], k: &[f64]) -> Result<f64> {
        Ok(dot(&self.push_variation(z, l, h), &self.push(z, k))
            + dot(&self.push(z, h), &self.push_variation(z, l, k)))
    }
}
