//! Python bindings for the shapegeo numerical laboratory.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use shapegeo_core as core;
use shapegeo_core::geodesics::{distance_estimate, DistanceStrategy};
use shapegeo_core::{BvpOptions, LandmarkConfig, LandmarkOracle, SphereOracle};

create_exception!(
    shapegeo,
    ShapegeoError,
    PyException,
    "Raised for any failure reported by the numerical core."
);

fn py_err(e: core::Error) -> PyErr {
    ShapegeoError::new_err(e.to_string())
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn sample(grid: core::PeriodicGrid, f: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    grid.nodes()
        .into_iter()
        .map(|x| f.call1((x,))?.extract::<f64>())
        .collect()
}

/// Uniform grid of `n` nodes on the circle; `n` is a power of two.
#[pyclass(
    name = "PeriodicGrid",
    frozen,
    skip_from_py_object,
    module = "shapegeo"
)]
#[derive(Clone, Copy)]
pub struct PyPeriodicGrid(core::PeriodicGrid);

#[pymethods]
impl PyPeriodicGrid {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        core::PeriodicGrid::new(n).map(Self).or_raise()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes()
    }

    /// Constant `C_q` of the bound `sup |f| ≤ C_q ‖f‖_q` on this grid.
    fn embedding_constant(&self, q: f64) -> f64 {
        self.0.embedding_constant(q)
    }

    fn __repr__(&self) -> String {
        format!("PeriodicGrid({})", self.0.len())
    }
}

/// Vector-valued function sampled on a periodic grid, one list per component.
#[pyclass(
    name = "PeriodicFunction",
    frozen,
    skip_from_py_object,
    module = "shapegeo"
)]
#[derive(Clone)]
pub struct PyPeriodicFunction(core::PeriodicFunction);

#[pymethods]
impl PyPeriodicFunction {
    #[new]
    fn new(grid: &PyPeriodicGrid, components: Vec<Vec<f64>>) -> PyResult<Self> {
        core::PeriodicFunction::from_components(grid.0, &components)
            .map(Self)
            .or_raise()
    }

    /// Samples a scalar callable at the grid nodes.
    #[staticmethod]
    fn from_fn(grid: &PyPeriodicGrid, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        Self::new(grid, vec![sample(grid.0, f)?])
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn grid(&self) -> PyPeriodicGrid {
        PyPeriodicGrid(self.0.grid())
    }

    fn components(&self) -> Vec<Vec<f64>> {
        (0..self.0.dim())
            .map(|c| self.0.component(c).to_vec())
            .collect()
    }

    fn derivative(&self, order: u32) -> Self {
        Self(self.0.derivative(order))
    }

    /// Trigonometric interpolant evaluated at `x`.
    fn eval(&self, x: f64) -> Vec<f64> {
        self.0.interpolant().eval(x)
    }

    fn sobolev_norm(&self, q: f64) -> PyResult<f64> {
        core::periodic::sobolev_norm(&self.0, q).or_raise()
    }

    fn sup_norm(&self) -> f64 {
        core::periodic::sup_norm(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("PeriodicFunction(n={}, dim={})", self.0.len(), self.0.dim())
    }
}

/// `H^q` inner product with weights `(1 + k²)^q`.
#[pyfunction]
fn sobolev_inner_product(f: &PyPeriodicFunction, g: &PyPeriodicFunction, q: f64) -> PyResult<f64> {
    core::periodic::sobolev_inner_product(&f.0, &g.0, q).or_raise()
}

/// `(1/2π) ∫ f·g + f^{(q)}·g^{(q)} dθ`.
#[pyfunction]
fn sobolev_inner_product_integer(
    f: &PyPeriodicFunction,
    g: &PyPeriodicFunction,
    q: u32,
) -> PyResult<f64> {
    core::periodic::sobolev_inner_product_integer(&f.0, &g.0, q).or_raise()
}

#[pyfunction]
fn pointwise_multiply(
    f: &PyPeriodicFunction,
    g: &PyPeriodicFunction,
) -> PyResult<PyPeriodicFunction> {
    core::periodic::pointwise_multiply(&f.0, &g.0)
        .map(PyPeriodicFunction)
        .or_raise()
}

/// Immersed closed curve in the plane or in higher dimension.
#[pyclass(name = "Curve", frozen, skip_from_py_object, module = "shapegeo")]
#[derive(Clone)]
pub struct PyCurve(core::Curve);

#[pymethods]
impl PyCurve {
    #[new]
    fn new(position: &PyPeriodicFunction) -> PyResult<Self> {
        core::Curve::new(position.0.clone()).map(Self).or_raise()
    }

    #[staticmethod]
    #[pyo3(signature = (grid, center=(0.0, 0.0), radius=1.0))]
    fn circle(grid: &PyPeriodicGrid, center: (f64, f64), radius: f64) -> PyResult<Self> {
        core::Curve::circle(grid.0, [center.0, center.1], radius)
            .map(Self)
            .or_raise()
    }

    fn length(&self) -> f64 {
        self.0.length()
    }

    /// Smallest speed `|c'|` over the grid.
    fn margin(&self) -> f64 {
        self.0.margin()
    }

    fn position(&self) -> PyPeriodicFunction {
        PyPeriodicFunction(self.0.pos().clone())
    }

    /// `∫ ⟨h, k⟩ |c'| dθ`.
    fn l2_metric(&self, h: &PyPeriodicFunction, k: &PyPeriodicFunction) -> PyResult<f64> {
        core::curves::l2_metric(&self.0, &h.0, &k.0).or_raise()
    }

    /// Derivative of `l2_metric(h, k)` in the direction `l`.
    fn l2_metric_variation(
        &self,
        l: &PyPeriodicFunction,
        h: &PyPeriodicFunction,
        k: &PyPeriodicFunction,
    ) -> PyResult<f64> {
        core::curves::l2_metric_variation(&self.0, &l.0, &h.0, &k.0).or_raise()
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve(n={}, dim={}, length={:.6})",
            self.0.grid().len(),
            self.0.dim(),
            self.0.length()
        )
    }
}

/// Orientation-preserving circle diffeomorphism on a grid.
#[pyclass(
    name = "CircleDiffeo",
    frozen,
    skip_from_py_object,
    module = "shapegeo"
)]
#[derive(Clone)]
pub struct PyCircleDiffeo(core::CircleDiffeo);

#[pymethods]
impl PyCircleDiffeo {
    /// From the lift `x ↦ φ(x)` as a callable with `φ(x + 2π) = φ(x) + 2π`.
    #[staticmethod]
    fn from_lift(grid: &PyPeriodicGrid, lift: &Bound<'_, PyAny>) -> PyResult<Self> {
        let values = sample(grid.0, lift)?;
        let disp = values
            .iter()
            .zip(grid.0.nodes())
            .map(|(y, x)| y - x)
            .collect();
        let disp = core::PeriodicFunction::from_values(grid.0, 1, disp).or_raise()?;
        core::CircleDiffeo::new(disp).map(Self).or_raise()
    }

    #[staticmethod]
    fn identity(grid: &PyPeriodicGrid) -> Self {
        Self(core::CircleDiffeo::identity(grid.0))
    }

    #[staticmethod]
    fn rotation(grid: &PyPeriodicGrid, angle: f64) -> Self {
        Self(core::CircleDiffeo::rotation(grid.0, angle))
    }

    /// Lift values `φ(x_j)` at the grid nodes.
    fn node_values(&self) -> Vec<f64> {
        self.0.node_values()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn min_derivative(&self) -> f64 {
        self.0.min_derivative()
    }

    /// `self ∘ other`.
    fn compose(&self, other: &Self) -> PyResult<Self> {
        core::diffeo::compose(&self.0, &other.0)
            .map(Self)
            .or_raise()
    }

    fn inverse(&self) -> PyResult<Self> {
        core::diffeo::invert(&self.0).map(Self).or_raise()
    }

    fn sup_distance(&self, other: &Self) -> PyResult<f64> {
        core::diffeo::sup_distance(&self.0, &other.0).or_raise()
    }
}

/// Vector field `u(x) ∂_x` on the circle.
#[pyclass(name = "CircleField", frozen, skip_from_py_object, module = "shapegeo")]
#[derive(Clone)]
pub struct PyCircleField(core::CircleField);

#[pymethods]
impl PyCircleField {
    #[new]
    fn new(grid: &PyPeriodicGrid, values: Vec<f64>) -> PyResult<Self> {
        let f = core::PeriodicFunction::from_values(grid.0, 1, values).or_raise()?;
        core::CircleField::new(f).map(Self).or_raise()
    }

    #[staticmethod]
    fn from_fn(grid: &PyPeriodicGrid, f: &Bound<'_, PyAny>) -> PyResult<Self> {
        Self::new(grid, sample(grid.0, f)?)
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().values().to_vec()
    }

    /// Time-`t` flow.
    fn flow(&self, t: f64) -> PyResult<PyCircleDiffeo> {
        core::diffeo::flow_autonomous(&self.0, t)
            .map(PyCircleDiffeo)
            .or_raise()
    }

    /// `(η, c)` with `η ∘ Fl_t = R_{ct} ∘ η`; the field must not vanish.
    fn conjugate_to_rotation(&self) -> PyResult<(PyCircleDiffeo, f64)> {
        core::diffeo::conjugate_to_rotation(&self.0)
            .map(|(eta, c)| (PyCircleDiffeo(eta), c))
            .or_raise()
    }
}

/// Field `u` with `exp(u) = ψ ∘ R_{2π/n} ∘ ψ⁻¹`, and the sup error of that flow.
#[pyfunction]
fn exp_noninjectivity_demo(psi: &PyCircleDiffeo, n: u32) -> PyResult<(PyCircleField, f64)> {
    core::diffeo::exp_noninjectivity_demo(&psi.0, n)
        .map(|(u, e)| (PyCircleField(u), e))
        .or_raise()
}

/// Escape time of `ẋ = x²` from `x0` within `[0, t_end]`, or `None`.
#[pyfunction]
#[pyo3(signature = (x0, t_end=1.0))]
fn quadratic_blowup(x0: f64, t_end: f64) -> Option<f64> {
    core::diffeo::quadratic_blowup(x0, t_end).blow_up_time
}

/// Translation-invariant scalar kernel.
#[pyclass(name = "Kernel", frozen, skip_from_py_object, module = "shapegeo")]
#[derive(Clone, Copy)]
pub struct PyKernel(core::Kernel);

#[pymethods]
impl PyKernel {
    #[staticmethod]
    fn gaussian(sigma: f64) -> PyResult<Self> {
        core::Kernel::gaussian(sigma).map(Self).or_raise()
    }

    /// Green's function of `(1 - ℓ²Δ)^order`, `order ∈ {1, 2}`.
    #[staticmethod]
    fn sobolev(order: u32, scale: f64) -> PyResult<Self> {
        core::Kernel::sobolev(order, scale).map(Self).or_raise()
    }

    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> f64 {
        self.0.eval(&x, &y)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

fn landmarks(points: Vec<Vec<f64>>) -> PyResult<LandmarkConfig> {
    LandmarkConfig::new(points).or_raise()
}

/// Scalar Gram matrix `K(q_i, q_j)`.
#[pyfunction]
fn gram_matrix(kernel: &PyKernel, q: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let g = core::kernels::gram_assemble(&kernel.0, &landmarks(q)?).or_raise()?;
    let m = g.scalar();
    Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Kernel-induced metric `⟨h, K(q)⁻¹ k⟩` on landmark tangent vectors.
#[pyfunction]
fn induced_metric(
    kernel: &PyKernel,
    q: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
) -> PyResult<f64> {
    core::kernels::induced_metric(&kernel.0, &landmarks(q)?, &h, &k).or_raise()
}

/// Geodesic distance between two landmark configurations of equal shape.
#[pyfunction]
#[pyo3(signature = (kernel, a, b, n_steps=16))]
fn landmark_distance(
    kernel: &PyKernel,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    n_steps: usize,
) -> PyResult<f64> {
    let (qa, qb) = (landmarks(a)?, landmarks(b)?);
    if (qa.len(), qa.dim()) != (qb.len(), qb.dim()) {
        return Err(ShapegeoError::new_err(
            "configurations differ in size or dimension",
        ));
    }
    let oracle = LandmarkOracle::new(kernel.0, qa.len(), qa.dim());
    let flat = |q: &LandmarkConfig| q.points().concat();
    let strategy = DistanceStrategy {
        n_steps,
        options: BvpOptions::default(),
    };
    distance_estimate(&flat(&qa), &flat(&qb), &oracle, &strategy).or_raise()
}

/// Geodesic distance on the unit sphere by the boundary-value solver.
#[pyfunction]
#[pyo3(signature = (x, y, n_steps=64))]
fn sphere_distance(x: Vec<f64>, y: Vec<f64>, n_steps: usize) -> PyResult<f64> {
    let oracle = SphereOracle::centred_between(&x, &y).or_raise()?;
    let (zx, zy) = (
        oracle.to_chart(&x).or_raise()?,
        oracle.to_chart(&y).or_raise()?,
    );
    let strategy = DistanceStrategy {
        n_steps,
        options: BvpOptions::default(),
    };
    distance_estimate(&zx, &zy, &oracle, &strategy).or_raise()
}

/// `arccos⟨x, y⟩` for unit vectors.
#[pyfunction]
fn sphere_distance_analytic(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    core::hilbert::sphere_distance_analytic(&x, &y).or_raise()
}

/// Rows `(n, length, bound)` for half great circles on Grossman's ellipsoid.
#[pyfunction]
#[pyo3(signature = (m=24, n_list=None))]
fn grossman(m: usize, n_list: Option<Vec<usize>>) -> PyResult<Vec<(usize, f64, f64)>> {
    let spec = core::EllipsoidSpec::new(m).or_raise()?;
    let ns = n_list.unwrap_or_else(|| (1..m.min(21)).collect());
    let rows = core::hilbert::grossman_experiment(&spec, &ns).or_raise()?;
    Ok(rows.into_iter().map(|r| (r.n, r.length, r.bound)).collect())
}

#[pymodule]
mod shapegeo {
    #[pymodule_export]
    use super::{
        exp_noninjectivity_demo, gram_matrix, grossman, induced_metric, landmark_distance,
        pointwise_multiply, quadratic_blowup, sobolev_inner_product, sobolev_inner_product_integer,
        sphere_distance, sphere_distance_analytic, PyCircleDiffeo, PyCircleField, PyCurve,
        PyKernel, PyPeriodicFunction, PyPeriodicGrid, ShapegeoError,
    };

    use pyo3::prelude::*;

    #[pymodule_init]
    fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
        m.add("__version__", shapegeo_core::VERSION)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_become_shapegeo_errors() {
        Python::initialize();
        Python::attach(|py| {
            let e = core::PeriodicGrid::new(3).or_raise().err().unwrap();
            assert!(e.is_instance_of::<ShapegeoError>(py));
            assert!(e.to_string().contains("invalid grid size 3"));
        });
    }
}
