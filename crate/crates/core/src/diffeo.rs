//! Diffeomorphisms of the circle and of the line, and the flows that generate them.
//!
//! Circle maps are stored as lifts `φ(x) = x + f(x)` with `f` periodic. The
//! mean of `f` is kept in `[-π, π)`, which fixes the lift up to nothing.
//! Flows are integrated node by node with classical RK4; a step size is
//! accepted once halving it changes the result by less than `1e-8`.

use std::f64::consts::{PI, TAU};

use crate::error::{check_dim, Error, Result};
use crate::periodic::{PeriodicFunction, PeriodicGrid, TrigInterpolant};

/// Base RK4 step for unit-time flows.
pub const BASE_STEPS_PER_UNIT_TIME: usize = 256;
/// Maximal disagreement between step `h` and `h/2` results.
pub const RICHARDSON_TOLERANCE: f64 = 1e-8;
/// Substep budget before a trajectory is declared to blow up.
pub const MAX_SUBSTEPS: usize = 1 << 20;

/// Reduces an angle difference to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Orientation-preserving diffeomorphism of the circle, `φ(x) = x + f(x)`.
#[derive(Debug, Clone)]
pub struct CircleDiffeo {
    disp: PeriodicFunction,
    interp: TrigInterpolant,
}

impl CircleDiffeo {
    /// Validates `1 + f' > 0` at the nodes and normalizes the lift.
    pub fn new(disp: PeriodicFunction) -> Result<Self> {
        check_dim(1, disp.dim())?;
        let n = disp.len() as f64;
        let mean = disp.values().iter().sum::<f64>() / n;
        let shift = TAU * ((mean + PI) / TAU).floor();
        let disp = if shift != 0.0 {
            disp.map(|v| v - shift)?
        } else {
            disp
        };
        let min_derivative = 1.0
            + disp
                .derivative(1)
                .values()
                .iter()
                .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_derivative <= 0.0 {
            return Err(Error::NotOrientationPreserving { min_derivative });
        }
        let interp = disp.interpolant();
        Ok(Self { disp, interp })
    }

    pub fn identity(grid: PeriodicGrid) -> Self {
        Self::new(PeriodicFunction::zeros(grid, 1)).expect("identity is a diffeomorphism")
    }

    pub fn rotation(grid: PeriodicGrid, angle: f64) -> Self {
        Self::new(PeriodicFunction::constant(grid, &[angle]))
            .expect("rotations are diffeomorphisms")
    }

    /// From a lift `x ↦ φ(x)` with `φ(x + 2π) = φ(x) + 2π`.
    pub fn from_lift(grid: PeriodicGrid, lift: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(PeriodicFunction::from_scalar_fn(grid, |x| lift(x) - x)?)
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.disp.grid()
    }

    pub fn displacement(&self) -> &PeriodicFunction {
        &self.disp
    }

    /// Lift value `x + f(x)` at an arbitrary `x`.
    pub fn eval(&self, x: f64) -> f64 {
        x + self.interp.eval_scalar(x)
    }

    /// Lift values `φ(θ_j)` at the grid nodes.
    pub fn node_values(&self) -> Vec<f64> {
        let grid = self.grid();
        self.disp
            .values()
            .iter()
            .enumerate()
            .map(|(j, f)| grid.node(j) + f)
            .collect()
    }

    /// `min_j (1 + f'(θ_j))`.
    pub fn min_derivative(&self) -> f64 {
        1.0 + self
            .disp
            .derivative(1)
            .values()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// `φ'` sampled at the nodes.
    pub fn derivative(&self) -> PeriodicFunction {
        self.disp.derivative(1).map(|v| 1.0 + v).expect("finite")
    }
}

/// `max_j |φ(θ_j) - ψ(θ_j)|` measured on the circle.
pub fn sup_distance(a: &CircleDiffeo, b: &CircleDiffeo) -> Result<f64> {
    a.disp.check_compatible(&b.disp)?;
    Ok(a.disp
        .values()
        .iter()
        .zip(b.disp.values())
        .fold(0.0, |m, (x, y)| f64::max(m, wrap_angle(x - y).abs())))
}

/// `φ ∘ ψ`.
pub fn compose(phi: &CircleDiffeo, psi: &CircleDiffeo) -> Result<CircleDiffeo> {
    phi.disp.check_compatible(&psi.disp)?;
    let grid = psi.grid();
    let values = psi
        .disp
        .values()
        .iter()
        .enumerate()
        .map(|(j, &f)| f + phi.interp.eval_scalar(grid.node(j) + f))
        .collect();
    CircleDiffeo::new(PeriodicFunction::from_values(grid, 1, values)?)
}

/// `φ⁻¹` by safeguarded Newton iteration on `x + f(x) = y` at each node.
pub fn invert(phi: &CircleDiffeo) -> Result<CircleDiffeo> {
    let grid = phi.grid();
    let dinterp = phi.disp.derivative(1).interpolant();
    let vals = phi.disp.values();
    let (fmin, fmax) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let margin = 0.1 * (fmax - fmin) + 1e-3;
    let mut out = Vec::with_capacity(grid.len());
    for y in grid.nodes() {
        let g = |x: f64| x + phi.interp.eval_scalar(x) - y;
        let mut lo = y - fmax - margin;
        let mut hi = y - fmin + margin;
        while g(lo) > 0.0 {
            lo -= 1.0;
        }
        while g(hi) < 0.0 {
            hi += 1.0;
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let gx = g(x);
            if gx.abs() < 1e-15 || hi - lo < 1e-14 {
                break;
            }
            if gx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = gx / (1.0 + dinterp.eval_scalar(x));
            let newton = x - step;
            x = if newton > lo && newton < hi && step.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        out.push(x - y);
    }
    CircleDiffeo::new(PeriodicFunction::from_values(grid, 1, out)?)
}

/// A vector field `u(x) ∂/∂x` on the circle.
#[derive(Debug, Clone)]
pub struct CircleField {
    u: PeriodicFunction,
    interp: TrigInterpolant,
}

impl CircleField {
    pub fn new(u: PeriodicFunction) -> Result<Self> {
        check_dim(1, u.dim())?;
        let interp = u.interpolant();
        Ok(Self { u, interp })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(PeriodicFunction::from_scalar_fn(grid, f)?)
    }

    pub fn values(&self) -> &PeriodicFunction {
        &self.u
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.u.grid()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.interp.eval_scalar(x)
    }
}

fn rk4_step(f: &impl Fn(f64, f64) -> f64, t: f64, x: f64, h: f64) -> f64 {
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    let k4 = f(t + h, x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn rk4_fixed(f: &impl Fn(f64, f64) -> f64, t0: f64, x0: f64, duration: f64, steps: usize) -> f64 {
    let h = duration / steps as f64;
    (0..steps).fold(x0, |x, i| rk4_step(f, t0 + i as f64 * h, x, h))
}

/// RK4 from `t0` over `duration`, doubling the step count until the result
/// agrees with the half-step result to [`RICHARDSON_TOLERANCE`].
fn rk4_richardson(f: &impl Fn(f64, f64) -> f64, t0: f64, x0: f64, duration: f64) -> Result<f64> {
    let mut steps = ((duration.abs() * BASE_STEPS_PER_UNIT_TIME as f64).ceil() as usize).max(1);
    let mut coarse = rk4_fixed(f, t0, x0, duration, steps);
    loop {
        let fine = rk4_fixed(f, t0, x0, duration, 2 * steps);
        if (fine - coarse).abs() <= RICHARDSON_TOLERANCE * (1.0 + fine.abs()) {
            return Ok(fine);
        }
        steps *= 2;
        if steps > MAX_SUBSTEPS {
            return Err(Error::StepCollapse(format!(
                "no step-size agreement from x0 = {x0}"
            )));
        }
        coarse = fine;
    }
}

/// The time-`t` flow of an autonomous field; `flow_autonomous(u, 1)` is `exp(u)`.
pub fn flow_autonomous(u: &CircleField, t: f64) -> Result<CircleDiffeo> {
    let grid = u.grid();
    let rhs = |_: f64, x: f64| u.eval(x);
    let disp = grid
        .nodes()
        .into_iter()
        .map(|x0| Ok(rk4_richardson(&rhs, 0.0, x0, t)? - x0))
        .collect::<Result<Vec<f64>>>()?;
    CircleDiffeo::new(PeriodicFunction::from_values(grid, 1, disp)?).map_err(|e| match e {
        Error::NotOrientationPreserving { min_derivative } => Error::StepCollapse(format!(
            "flow lost orientation (min derivative {min_derivative:e})"
        )),
        other => other,
    })
}

/// Uniform grid `lo = x_0 < … < x_{n-1} = hi` on a window of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for LineGrid {
    fn default() -> Self {
        Self {
            lo: -10.0,
            hi: 10.0,
            n: 2048,
        }
    }
}

impl LineGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 4 || !(hi > lo) {
            return Err(Error::ParameterViolation(format!(
                "bad line grid [{lo}, {hi}] with {n} nodes"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }

    /// Catmull–Rom cubic interpolation of grid samples; `None` outside the window.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Option<f64> {
        if !self.contains(x) {
            return None;
        }
        let h = self.spacing();
        let s = (x - self.lo) / h;
        let i = (s.floor() as usize).min(self.n - 2);
        let t = s - i as f64;
        let p = |k: isize| -> f64 {
            if k < 0 {
                2.0 * values[0] - values[1]
            } else if k as usize >= self.n {
                2.0 * values[self.n - 1] - values[self.n - 2]
            } else {
                values[k as usize]
            }
        };
        let i = i as isize;
        let (p0, p1, p2, p3) = (p(i - 1), p(i), p(i + 1), p(i + 2));
        Some(
            p1 + 0.5
                * t
                * (p2 - p0
                    + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0))),
        )
    }
}

/// Where a time-dependent field lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldDomain {
    Circle(PeriodicGrid),
    Line(LineGrid),
}

impl FieldDomain {
    pub fn nodes(&self) -> Vec<f64> {
        match self {
            FieldDomain::Circle(g) => g.nodes(),
            FieldDomain::Line(g) => g.nodes(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FieldDomain::Circle(g) => g.len(),
            FieldDomain::Line(g) => g.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeInterpolation {
    PiecewiseConstant,
    PiecewiseLinear,
}

#[derive(Debug, Clone)]
enum SpatialSampler {
    Circle(Vec<TrigInterpolant>),
    Line(LineGrid),
}

/// A field `u(t, x)` given at time knots `t_0 < … < t_K` in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TimeDependentField {
    domain: FieldDomain,
    knots: Vec<f64>,
    samples: Vec<Vec<f64>>,
    interpolation: TimeInterpolation,
    sampler: SpatialSampler,
}

impl TimeDependentField {
    pub fn new(
        domain: FieldDomain,
        knots: Vec<f64>,
        samples: Vec<Vec<f64>>,
        interpolation: TimeInterpolation,
    ) -> Result<Self> {
        if knots.is_empty() || knots.len() != samples.len() {
            return Err(Error::ParameterViolation(
                "one field per time knot is required".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) || knots[0] < 0.0 || *knots.last().unwrap() > 1.0
        {
            return Err(Error::ParameterViolation(
                "time knots must increase within [0, 1]".into(),
            ));
        }
        for s in &samples {
            check_dim(domain.len(), s.len())?;
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("time-dependent field"));
            }
        }
        let sampler = match domain {
            FieldDomain::Circle(g) => SpatialSampler::Circle(
                samples
                    .iter()
                    .map(|s| {
                        PeriodicFunction::from_values(g, 1, s.clone()).map(|f| f.interpolant())
                    })
                    .collect::<Result<_>>()?,
            ),
            FieldDomain::Line(g) => SpatialSampler::Line(g),
        };
        Ok(Self {
            domain,
            knots,
            samples,
            interpolation,
            sampler,
        })
    }

    /// Samples `f(t_k, x)` at every knot.
    pub fn from_fn(
        domain: FieldDomain,
        knots: Vec<f64>,
        interpolation: TimeInterpolation,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let nodes = domain.nodes();
        let samples = knots
            .iter()
            .map(|&t| nodes.iter().map(|&x| f(t, x)).collect())
            .collect();
        Self::new(domain, knots, samples, interpolation)
    }

    pub fn domain(&self) -> FieldDomain {
        self.domain
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// The field `-u(1 - t, ·)`, whose flow undoes the flow of `u`.
    pub fn time_reversed(&self) -> Result<Self> {
        match self.interpolation {
            TimeInterpolation::PiecewiseLinear => {
                let knots = self.knots.iter().rev().map(|t| 1.0 - t).collect();
                let samples = negated(&self.samples).into_iter().rev().collect();
                Self::new(self.domain, knots, samples, self.interpolation)
            }
            TimeInterpolation::PiecewiseConstant => {
                // field k holds on [t_k, t_{k+1}), field 0 also before t_0, the last one up to 1
                let mut bounds: Vec<f64> = self.knots.clone();
                bounds[0] = 0.0;
                bounds.push(1.0);
                let mut pieces: Vec<(f64, Vec<f64>)> = bounds
                    .windows(2)
                    .zip(negated(&self.samples))
                    .filter(|(w, _)| w[1] > w[0])
                    .map(|(w, s)| (1.0 - w[1], s))
                    .collect();
                pieces.reverse();
                let (knots, samples) = pieces.into_iter().unzip();
                Self::new(self.domain, knots, samples, self.interpolation)
            }
        }
    }

    fn spatial(&self, k: usize, x: f64) -> Option<f64> {
        match &self.sampler {
            SpatialSampler::Circle(interps) => Some(interps[k].eval_scalar(x)),
            SpatialSampler::Line(g) => g.interpolate(&self.samples[k], x),
        }
    }

    /// `u(t, x)`; `None` when `x` leaves a line window.
    pub fn eval(&self, t: f64, x: f64) -> Option<f64> {
        let k = self.knots.partition_point(|&s| s <= t);
        match self.interpolation {
            TimeInterpolation::PiecewiseConstant => self.spatial(k.saturating_sub(1), x),
            TimeInterpolation::PiecewiseLinear => {
                if k == 0 {
                    self.spatial(0, x)
                } else if k == self.knots.len() {
                    self.spatial(k - 1, x)
                } else {
                    let (t0, t1) = (self.knots[k - 1], self.knots[k]);
                    let lam = (t - t0) / (t1 - t0);
                    Some((1.0 - lam) * self.spatial(k - 1, x)? + lam * self.spatial(k, x)?)
                }
            }
        }
    }
}

fn negated(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    samples
        .iter()
        .map(|s| s.iter().map(|v| -v).collect())
        .collect()
}

/// Result of integrating a flow to `t = 1` (or until escape).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// `φ(1, x_i)` for the starting points, absent after blow-up.
    pub final_map: Option<Vec<f64>>,
    pub blow_up: bool,
    pub blow_up_time: Option<f64>,
}

impl FlowResult {
    /// Interpret a completed circle flow from the grid nodes as a diffeomorphism.
    pub fn to_circle_diffeo(&self, grid: PeriodicGrid) -> Result<CircleDiffeo> {
        let map = self
            .final_map
            .as_ref()
            .ok_or_else(|| Error::StepCollapse("flow blew up; no final map".into()))?;
        check_dim(grid.len(), map.len())?;
        let disp = map.iter().zip(grid.nodes()).map(|(y, x)| y - x).collect();
        CircleDiffeo::new(PeriodicFunction::from_values(grid, 1, disp)?)
    }

    /// `φ(1, x_i) - x_i` on a line grid.
    pub fn displacement(&self, grid: &LineGrid) -> Option<Vec<f64>> {
        self.final_map
            .as_ref()
            .map(|m| m.iter().zip(grid.nodes()).map(|(y, x)| y - x).collect())
    }
}

/// Flow of `u` from the domain's grid nodes over `t ∈ [0, 1]`.
pub fn flow_time_dependent(u: &TimeDependentField) -> Result<FlowResult> {
    flow_time_dependent_from(u, &u.domain.nodes())
}

/// Flow of `u` from arbitrary starting points. On a line window a trajectory
/// that exits `[lo, hi]` sets `blow_up`.
pub fn flow_time_dependent_from(u: &TimeDependentField, starts: &[f64]) -> Result<FlowResult> {
    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(u.knots.iter().copied().filter(|&t| t > 0.0 && t < 1.0))
        .chain(std::iter::once(1.0))
        .collect();
    breaks.dedup();
    let mut finals = Vec::with_capacity(starts.len());
    let mut earliest: Option<f64> = None;
    for &x0 in starts {
        let mut x = x0;
        let mut escaped = None;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            // evaluate inside the open piece so piecewise-constant fields pick the right knot
            let exit = std::cell::Cell::new(false);
            let rhs = |t: f64, y: f64| {
                let tt = t.clamp(a + 1e-14 * (b - a), b - 1e-14 * (b - a));
                u.eval(tt, y).unwrap_or_else(|| {
                    exit.set(true);
                    0.0
                })
            };
            let next = rk4_richardson(&rhs, a, x, b - a);
            if exit.get() {
                escaped = Some(a);
                break;
            }
            x = next?;
        }
        match escaped {
            Some(t) => earliest = Some(earliest.map_or(t, |e: f64| e.min(t))),
            None => finals.push(x),
        }
    }
    Ok(match earliest {
        Some(t) => FlowResult {
            final_map: None,
            blow_up: true,
            blow_up_time: Some(t),
        },
        None => FlowResult {
            final_map: Some(finals),
            blow_up: false,
            blow_up_time: None,
        },
    })
}

/// Adaptive RK4 for a scalar autonomous ODE `ẋ = u(x)` on the real line.
///
/// Escape is declared when `|x|` exceeds `escape_radius`, when the substep
/// budget runs out, or when the step size collapses.
pub fn flow_scalar_ode(
    u: impl Fn(f64) -> f64,
    x0: f64,
    t_end: f64,
    escape_radius: f64,
) -> FlowResult {
    let f = |_: f64, x: f64| u(x);
    let h_max = 1.0 / BASE_STEPS_PER_UNIT_TIME as f64;
    let mut t = 0.0;
    let mut x = x0;
    let mut h = h_max;
    let mut substeps = 0usize;
    let blown = |t: f64| FlowResult {
        final_map: None,
        blow_up: true,
        blow_up_time: Some(t),
    };
    while t < t_end {
        if substeps > MAX_SUBSTEPS || h < 1e-300 {
            return blown(t);
        }
        h = h.min(t_end - t);
        let big = rk4_step(&f, t, x, h);
        let half = rk4_step(&f, t + 0.5 * h, rk4_step(&f, t, x, 0.5 * h), 0.5 * h);
        substeps += 3;
        let err = (big - half).abs();
        if !half.is_finite() || err > 1e-10 * (1.0 + half.abs()) {
            h *= 0.5;
            continue;
        }
        t += h;
        x = half;
        if x.abs() > escape_radius {
            return blown(t);
        }
        h = (2.0 * h).min(h_max);
    }
    FlowResult {
        final_map: Some(vec![x]),
        blow_up: false,
        blow_up_time: None,
    }
}

/// Flow of `u(x) = x²` from `x0`, which escapes at `t = 1/x0` for `x0 > 0`.
pub fn quadratic_blowup(x0: f64, t_end: f64) -> FlowResult {
    flow_scalar_ode(|x| x * x, x0, t_end, 1e12)
}

/// Checks `1 + f' > 0` for a displacement sampled on a line window.
///
/// The displacement must decay to below `1e-6` at both window edges, standing
/// in for membership of `Id + H^q`.
pub fn membership_check(grid: &LineGrid, displacement: &[f64]) -> Result<bool> {
    check_dim(grid.n, displacement.len())?;
    let edge = displacement[0].abs().max(displacement[grid.n - 1].abs());
    if edge >= 1e-6 {
        return Err(Error::NonDecaying(edge));
    }
    let h = grid.spacing();
    let n = grid.n;
    let deriv = |i: usize| -> f64 {
        if i == 0 {
            (displacement[1] - displacement[0]) / h
        } else if i == n - 1 {
            (displacement[n - 1] - displacement[n - 2]) / h
        } else {
            (displacement[i + 1] - displacement[i - 1]) / (2.0 * h)
        }
    };
    Ok((0..n).all(|i| 1.0 + deriv(i) > 0.0))
}

/// `η(x) = c ∫₀ˣ dy/u(y)` with `c = 2π / ∫ dx/u`, conjugating the flow of `u`
/// to the rotation with speed `c`.
pub fn conjugate_to_rotation(u: &CircleField) -> Result<(CircleDiffeo, f64)> {
    let min_abs = u
        .values()
        .values()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let signs_agree = {
        let v = u.values().values();
        v.iter().all(|&a| a > 0.0) || v.iter().all(|&a| a < 0.0)
    };
    if min_abs <= 1e-8 || !signs_agree {
        return Err(Error::VanishingField(min_abs));
    }
    let grid = u.grid();
    let recip = u.values().map(|v| 1.0 / v)?;
    let s = recip.transform();
    let g0 = s.coeff(0, 0).re;
    let c = 1.0 / g0;
    // ∫₀ˣ Σ_{k≠0} ĝ_k e^{iky} dy = Σ_{k≠0} ĝ_k (e^{ikx} - 1)/(ik)
    let n = grid.len();
    let disp = grid
        .nodes()
        .into_iter()
        .map(|x| {
            let mut acc = 0.0;
            for idx in 1..n {
                let k = grid.wavenumber(idx);
                if idx == n / 2 {
                    // Nyquist mode carries cos((n/2)x); its antiderivative vanishes at the nodes
                    continue;
                }
                let kf = k as f64;
                let e = num_complex::Complex64::new((kf * x).cos() - 1.0, (kf * x).sin());
                acc += (s.component(0)[idx] * e / num_complex::Complex64::new(0.0, kf)).re;
            }
            c * acc
        })
        .collect();
    let eta = CircleDiffeo::new(PeriodicFunction::from_values(grid, 1, disp)?)?;
    Ok((eta, c))
}

/// Builds `u(x) = (2π/n) ψ'(ψ⁻¹(x))`, flows it to `t = 1` and returns the sup
/// distance from the rotation by `2π/n`.
///
/// `ψ` must commute with that rotation: `ψ(x + 2π/n) = ψ(x) + 2π/n`.
pub fn exp_noninjectivity_demo(psi: &CircleDiffeo, n: u32) -> Result<(CircleField, f64)> {
    if n == 0 {
        return Err(Error::ParameterViolation("n must be positive".into()));
    }
    let grid = psi.grid();
    let shift = TAU / n as f64;
    let defect = grid
        .nodes()
        .into_iter()
        .map(|x| (psi.eval(x + shift) - psi.eval(x) - shift).abs())
        .fold(0.0, f64::max);
    if defect > 1e-8 {
        return Err(Error::NotPeriodic(defect));
    }
    let inv = invert(psi)?;
    let dpsi = psi.derivative().interpolant();
    let u = CircleField::from_fn(grid, |x| shift * dpsi.eval_scalar(inv.eval(x)))?;
    let flow = flow_autonomous(&u, 1.0)?;
    let err = sup_distance(&flow, &CircleDiffeo::rotation(grid, shift))?;
    Ok((u, err))
}

/// Isolated solutions of `φ^p(x) = x` (mod 2π) found on a dense sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPointScan {
    pub points: Vec<f64>,
    /// `φ^p` is the identity to roundoff: every point is periodic.
    pub degenerate: bool,
}

/// `φ^p` evaluated as a lift at `x`.
pub fn iterate_lift(phi: &CircleDiffeo, p: u32, x: f64) -> f64 {
    (0..p).fold(x, |y, _| phi.eval(y))
}

pub fn periodic_points(phi: &CircleDiffeo, p: u32, samples: usize) -> PeriodicPointScan {
    let raw = |x: f64| iterate_lift(phi, p, x) - x;
    let xs: Vec<f64> = (0..=samples)
        .map(|i| TAU * i as f64 / samples as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| raw(x)).collect();
    let mean = vals[..samples].iter().sum::<f64>() / samples as f64;
    let turns = TAU * (mean / TAU).round();
    let h = |x: f64| raw(x) - turns;
    let hv: Vec<f64> = vals.iter().map(|v| v - turns).collect();
    if hv.iter().all(|v| v.abs() < 1e-12) {
        return PeriodicPointScan {
            points: Vec::new(),
            degenerate: true,
        };
    }
    let mut points = Vec::new();
    for i in 0..samples {
        let (a, b) = (hv[i], hv[i + 1]);
        if a == 0.0 {
            points.push(xs[i]);
        } else if a * b < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            let lo_sign = a.signum();
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if h(mid).signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            points.push(0.5 * (lo + hi));
        }
    }
    PeriodicPointScan {
        points,
        degenerate: false,
    }
}

/// `φ(x) = x + 2π/n + ε sin(nx)` together with the hypotheses that keep it
/// out of the image of the exponential map.
#[derive(Debug, Clone)]
pub struct NonSurjectivityCandidate {
    pub map: CircleDiffeo,
    /// `min_x |φ(x) - x|` on the circle.
    pub min_displacement: f64,
    pub fixed_point_free: bool,
    /// Solutions of `φⁿ(x) = x`.
    pub periodic_points: PeriodicPointScan,
}

/// Requires `|ε| < 2/n`; the map must in addition be orientation preserving,
/// which needs `|ε| n < 1`.
pub fn nonsurjectivity_candidate(
    grid: PeriodicGrid,
    n: u32,
    eps: f64,
) -> Result<NonSurjectivityCandidate> {
    if n == 0 || eps.abs() >= 2.0 / n as f64 {
        return Err(Error::ParameterViolation(format!(
            "need |eps| < 2/n, got eps = {eps}, n = {n}"
        )));
    }
    let nf = n as f64;
    let map = CircleDiffeo::from_lift(grid, |x| x + TAU / nf + eps * (nf * x).sin())?;
    let dense = 16 * grid.len();
    let min_displacement = (0..dense)
        .map(|i| {
            let x = TAU * i as f64 / dense as f64;
            wrap_angle(map.eval(x) - x).abs()
        })
        .fold(f64::INFINITY, f64::min);
    let periodic_points = periodic_points(&map, n, dense);
    Ok(NonSurjectivityCandidate {
        map,
        min_displacement,
        fixed_point_free: min_displacement > 1e-12,
        periodic_points,
    })
}

/// Coarse search over `u = a + b sin(nx) + c cos(nx)` for a field whose
/// time-one flow matches `target`; returns the best sup distance and its
/// coefficients.
pub fn exp_preimage_search(
    target: &CircleDiffeo,
    n: u32,
    levels: usize,
) -> Result<(f64, [f64; 3])> {
    let grid = target.grid();
    let nf = n as f64;
    let base = TAU / nf;
    let span = |i: usize, lo: f64, hi: f64| {
        if levels <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (levels - 1) as f64
        }
    };
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..levels {
        let a = span(i, 0.5 * base, 1.5 * base);
        for j in 0..levels {
            let b = span(j, -0.5, 0.5);
            for k in 0..levels {
                let c = span(k, -0.5, 0.5);
                let u =
                    CircleField::from_fn(grid, |x| a + b * (nf * x).sin() + c * (nf * x).cos())?;
                if let Ok(phi) = flow_autonomous(&u, 1.0) {
                    let d = sup_distance(&phi, target)?;
                    if d < best.0 {
                        best = (d, [a, b, c]);
                    }
                }
            }
        }
    }
    Ok(best)
}
