//! One function per subcommand, each producing a table, a plot spec and
//! summary values.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapegeo_core::curves::{
    default_vanishing_levels, vanishing_distance_experiment, VanishingMetric,
};
use shapegeo_core::diffeo::{
    compose, conjugate_to_rotation, exp_noninjectivity_demo, flow_autonomous, flow_scalar_ode,
    flow_time_dependent, flow_time_dependent_from, membership_check, quadratic_blowup,
    sup_distance, FieldDomain, TimeInterpolation,
};
use shapegeo_core::geodesics::{bvp_minimize, path_length};
use shapegeo_core::hilbert::{grossman_experiment, sphere_distance_analytic};
use shapegeo_core::periodic::{pointwise_multiply, sobolev_norm};
use shapegeo_core::{
    BvpOptions, CircleDiffeo, CircleField, EllipsoidSpec, Kernel, LandmarkConfig, LandmarkOracle,
    LineGrid, Path, PeriodicFunction, PeriodicGrid, SphereOracle, TimeDependentField,
};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::plot::PlotSpec;
use crate::table::{format_real, ResultTable};

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    pub plot: PlotSpec,
    pub summary: Vec<(String, String)>,
}

#[derive(Default)]
struct Summary(Vec<(String, String)>);

impl Summary {
    fn real(&mut self, key: &str, v: f64) -> &mut Self {
        self.0.push((key.into(), format_real(v)));
        self
    }

    fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.0.push((key.into(), v.to_string()));
        self
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    match cfg.experiment {
        Experiment::Grossman => grossman(cfg),
        Experiment::VanishingL2 => vanishing_l2(cfg),
        Experiment::SphereBvp => sphere_bvp(cfg),
        Experiment::ExpCircle => exp_circle(cfg),
        Experiment::Blowup => blowup(cfg),
        Experiment::LandmarkGeodesic => landmark_geodesic(cfg),
        Experiment::LddmmFlow => lddmm_flow(cfg),
        Experiment::SobolevProps => sobolev_props(cfg),
    }
}

fn seeded(cfg: &ExperimentConfig) -> Result<ChaCha8Rng, CliError> {
    Ok(ChaCha8Rng::seed_from_u64(cfg.require_seed()?))
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn bool_real(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn grossman(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let spec = EllipsoidSpec::new(cfg.usize("m")?)?;
    let ns: Vec<usize> = cfg
        .int_list("n_list")?
        .into_iter()
        .map(|n| n as usize)
        .collect();
    let rows = grossman_experiment(&spec, &ns)?;
    let mut table = ResultTable::new(
        &["n", "length", "bound", "excess"],
        "lengths of half great circles mapped onto Grossman's ellipsoid, pi < Len <= (1 + 2^-n) pi",
    );
    for r in &rows {
        table.push(vec![r.n as f64, r.length, r.bound, r.length - PI])?;
    }
    let bounded = rows
        .iter()
        .all(|r| r.length > PI && r.length <= r.bound + 1e-9);
    let decreasing = rows
        .windows(2)
        .all(|w| w[0].n >= w[1].n || w[1].length < w[0].length);
    let mut s = Summary::default();
    s.flag("bound_holds", bounded)
        .flag("decreasing", decreasing);
    if let Some(last) = rows.last() {
        s.real("last_excess", last.length - PI);
    }
    let plot = if cfg.flag("log_scale")? {
        PlotSpec::lines(
            "Grossman ellipsoid: excess length",
            "n",
            &["excess"],
            "Len - π",
        )
        .log_y(true)
    } else {
        PlotSpec::lines(
            "Grossman ellipsoid: half great circle lengths",
            "n",
            &["length", "bound"],
            "length",
        )
        .reference(PI, "π")
    };
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn vanishing_l2(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let max_iter = cfg.usize("max_iter")?;
    let levels: Vec<_> = default_vanishing_levels()
        .into_iter()
        .take(cfg.usize("levels")?)
        .map(|mut l| {
            l.max_iter = max_iter;
            l
        })
        .collect();
    let l2 = vanishing_distance_experiment(&levels, VanishingMetric::L2)?;
    let flat = vanishing_distance_experiment(&levels, VanishingMetric::Euclidean)?;
    let mut table = ResultTable::new(
        &[
            "k",
            "n_samples",
            "n_steps",
            "initial_length",
            "l2_length",
            "l2_energy",
            "iterations",
            "converged",
            "euclidean_length",
        ],
        "L2 path lengths from the unit circle to its (0.5, 0) translate along sawtooth refinements",
    );
    for (a, b) in l2.iter().zip(&flat) {
        table.push(vec![
            a.k as f64,
            a.n_samples as f64,
            a.n_steps as f64,
            a.initial_length,
            a.length,
            a.energy,
            a.iterations as f64,
            bool_real(a.converged),
            b.length,
        ])?;
    }
    let chord = 0.5 * TAU.sqrt();
    let mut s = Summary::default();
    s.flag(
        "l2_decreasing",
        l2.windows(2).all(|w| w[1].length < w[0].length),
    )
    .flag(
        "euclidean_pinned",
        flat.iter().all(|r| (r.length - chord).abs() <= 1e-9),
    );
    let plot = PlotSpec::lines(
        "Path length across sawtooth refinements",
        "k",
        &["l2_length", "euclidean_length"],
        "length",
    );
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn sphere_bvp(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut rng = seeded(cfg)?;
    let (m, n_steps) = (cfg.usize("m")?, cfg.usize("n_steps")?);
    let options = BvpOptions {
        max_iter: cfg.usize("max_iter")?,
        ..BvpOptions::default()
    };
    let mut table = ResultTable::new(
        &["pair", "arccos", "length", "error", "iterations"],
        "geodesic boundary value problem on the unit sphere of R^m against arccos<x, y>",
    );
    let mut worst = 0.0f64;
    for i in 0..cfg.usize("pairs")? {
        let (x, y) = (random_unit(&mut rng, m), random_unit(&mut rng, m));
        let oracle = SphereOracle::centred_between(&x, &y)?;
        let (zx, zy) = (oracle.to_chart(&x)?, oracle.to_chart(&y)?);
        let (path, report) = bvp_minimize(
            &zx,
            &zy,
            &oracle,
            Path::linear(&zx, &zy, n_steps)?,
            &options,
        )?;
        let length = path_length(&path, &oracle)?;
        let exact = sphere_distance_analytic(&x, &y)?;
        worst = worst.max((length - exact).abs());
        table.push(vec![
            i as f64,
            exact,
            length,
            (length - exact).abs(),
            report.iterations as f64,
        ])?;
    }
    let mut s = Summary::default();
    s.real("max_error", worst);
    let plot = PlotSpec::lines(
        "Sphere geodesics: |length - arccos|",
        "pair",
        &["error"],
        "absolute error",
    )
    .log_y(true)
    .scatter();
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn exp_circle(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let grid = PeriodicGrid::new(cfg.usize("n")?)?;
    let amp = cfg.real("amp")?;
    let (t_max, samples) = (cfg.real("t_max")?, cfg.usize("samples")?);
    let (order, psi_amp) = (cfg.usize("order")?, cfg.real("psi_amp")?);
    if psi_amp * order as f64 >= 1.0 {
        return Err(CliError::Config(format!(
            "psi_amp * order = {} must be below 1",
            psi_amp * order as f64
        )));
    }
    let u = CircleField::from_fn(grid, |x| 1.0 + amp * x.sin())?;
    let (eta, c) = conjugate_to_rotation(&u)?;
    let mut table = ResultTable::new(
        &["t", "conjugation_error", "rotation_angle"],
        "flow of u = 1 + amp sin x conjugated to the rotation by c t",
    );
    for i in 0..samples {
        let t = t_max * i as f64 / (samples - 1) as f64;
        let lhs = compose(&eta, &flow_autonomous(&u, t)?)?;
        let rhs = compose(&CircleDiffeo::rotation(grid, c * t), &eta)?;
        table.push(vec![t, sup_distance(&lhs, &rhs)?, c * t])?;
    }
    let k = order as f64;
    let psi = CircleDiffeo::from_lift(grid, |x| x + psi_amp * (k * x).sin())?;
    let (u1, e1) = exp_noninjectivity_demo(&CircleDiffeo::identity(grid), order as u32)?;
    let (u2, e2) = exp_noninjectivity_demo(&psi, order as u32)?;
    let gap = u1
        .values()
        .values()
        .iter()
        .zip(u2.values().values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let closed = (1.0 - amp * amp).sqrt();
    let mut s = Summary::default();
    s.real("c", c)
        .real("c_closed_form", closed)
        .real(
            "max_conjugation_error",
            table
                .column("conjugation_error")?
                .into_iter()
                .fold(0.0, f64::max),
        )
        .real("noninjective_field_gap", gap)
        .real("flow_error_rotation_field", e1)
        .real("flow_error_conjugated_field", e2);
    let plot = PlotSpec::lines(
        "Conjugation to a rotation",
        "t",
        &["conjugation_error"],
        "sup error",
    )
    .log_y(true);
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn blowup(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (x0, t_end, samples) = (cfg.real("x0")?, cfg.real("t_end")?, cfg.usize("samples")?);
    let horizon = t_end.min(0.95 / x0);
    let mut table = ResultTable::new(
        &["t", "numeric", "exact", "relative_error"],
        "flow of u(x) = x^2 against x0 / (1 - t x0)",
    );
    for i in 0..samples {
        let t = horizon * i as f64 / (samples - 1) as f64;
        let r = flow_scalar_ode(|x| x * x, x0, t, 1e12);
        let x = r
            .final_map
            .and_then(|m| m.first().copied())
            .ok_or_else(|| CliError::Check(format!("flow escaped before t = {t}")))?;
        let exact = x0 / (1.0 - t * x0);
        table.push(vec![t, x, exact, (x - exact).abs() / exact])?;
    }
    let r = quadratic_blowup(x0, t_end);
    let mut s = Summary::default();
    s.flag("blow_up", r.blow_up)
        .real("expected_blow_up_time", 1.0 / x0);
    if let Some(t) = r.blow_up_time {
        s.real("blow_up_time", t);
    }
    let plot = PlotSpec::lines("Quadratic blow-up", "t", &["numeric", "exact"], "x(t)").log_y(true);
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn random_config(rng: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> LandmarkConfig {
    loop {
        let pts = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-spread..spread)).collect())
            .collect();
        if let Ok(q) = LandmarkConfig::new(pts) {
            if q.min_separation() > 0.05 {
                return q;
            }
        }
    }
}

fn landmark_geodesic(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut rng = seeded(cfg)?;
    let (n, d, n_steps) = (
        cfg.usize("landmarks")?,
        cfg.usize("dim")?,
        cfg.usize("n_steps")?,
    );
    let (spread, perturb) = (cfg.real("spread")?, cfg.real("perturb")?);
    let sigma = cfg.real("sigma")?;
    let kernel = match cfg.text("kernel")? {
        "sobolev1" => Kernel::sobolev(1, sigma)?,
        "sobolev2" => Kernel::sobolev(2, sigma)?,
        _ => Kernel::gaussian(sigma)?,
    };
    let oracle = LandmarkOracle::new(kernel, n, d);
    let options = BvpOptions::default();
    let mut table = ResultTable::new(
        &["pair", "straight_length", "distance", "permuted_distance", "iterations"],
        "kernel-induced geodesic distance between landmark configurations, invariant under relabelling",
    );
    let geodesic = |a: &[f64], b: &[f64]| -> Result<(f64, usize), CliError> {
        let (path, report) = bvp_minimize(a, b, &oracle, Path::linear(a, b, n_steps)?, &options)?;
        Ok((path_length(&path, &oracle)?, report.iterations))
    };
    let mut gap = 0.0f64;
    for i in 0..cfg.usize("pairs")? {
        let (a, b) = loop {
            let a = random_config(&mut rng, n, d, spread);
            let moved: Vec<Vec<f64>> = a
                .points()
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|v| v + perturb * rng.random_range(-1.0..1.0))
                        .collect()
                })
                .collect();
            if let Ok(b) = LandmarkConfig::new(moved) {
                if b.min_separation() > 0.05 {
                    break (a, b);
                }
            }
        };
        let flat = |q: &LandmarkConfig, shift: usize| -> Vec<f64> {
            (0..n)
                .flat_map(|j| q.points()[(j + shift) % n].clone())
                .collect()
        };
        let (fa, fb) = (flat(&a, 0), flat(&b, 0));
        let straight = path_length(&Path::linear(&fa, &fb, n_steps)?, &oracle)?;
        let (dist, iters) = geodesic(&fa, &fb)?;
        let (perm, _) = geodesic(&flat(&a, 1), &flat(&b, 1))?;
        gap = gap.max((dist - perm).abs());
        table.push(vec![i as f64, straight, dist, perm, iters as f64])?;
    }
    let mut s = Summary::default();
    s.real("max_permutation_gap", gap);
    let plot = PlotSpec::lines(
        "Landmark geodesics",
        "pair",
        &["straight_length", "distance"],
        "length",
    )
    .scatter();
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn lddmm_flow(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut rng = seeded(cfg)?;
    let line = LineGrid::new(cfg.real("lo")?, cfg.real("hi")?, cfg.usize("n")?)?;
    let (amp, width) = (cfg.real("amp")?, cfg.real("width")?);
    let knots_n = cfg.usize("knots")?;
    let interp = match cfg.text("interpolation")? {
        "constant" => TimeInterpolation::PiecewiseConstant,
        _ => TimeInterpolation::PiecewiseLinear,
    };
    let span = line.hi - line.lo;
    // centres stay in the middle of the window so the field decays at its edges
    let bumps: Vec<(f64, f64, f64)> = (0..cfg.usize("bumps")?)
        .map(|_| {
            let z = rng.random_range(line.lo + 0.3 * span..line.hi - 0.3 * span);
            (z, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .collect();
    let field = |t: f64, x: f64| {
        amp * bumps
            .iter()
            .map(|&(z, a, c)| (a + c * t) * (-(x - z).powi(2) / (2.0 * width * width)).exp())
            .sum::<f64>()
    };
    let knots: Vec<f64> = (0..=knots_n).map(|i| i as f64 / knots_n as f64).collect();
    let u = TimeDependentField::from_fn(FieldDomain::Line(line), knots, interp, field)?;
    let fwd = flow_time_dependent(&u)?;
    let end = fwd
        .final_map
        .as_ref()
        .filter(|_| !fwd.blow_up)
        .ok_or_else(|| CliError::Check("forward flow left the window".into()))?;
    let back = flow_time_dependent_from(&u.time_reversed()?, end)?;
    let home = back
        .final_map
        .as_ref()
        .filter(|_| !back.blow_up)
        .ok_or_else(|| CliError::Check("reverse flow left the window".into()))?;
    let disp = fwd.displacement(&line).unwrap_or_default();
    let member = membership_check(&line, &disp)?;
    let mut table = ResultTable::new(
        &["x", "displacement", "round_trip_error"],
        "time-dependent flow on the line followed by the flow of the time-reversed field",
    );
    let mut worst = 0.0f64;
    for ((x, d), h) in line.nodes().into_iter().zip(&disp).zip(home) {
        worst = worst.max((h - x).abs());
        table.push(vec![x, *d, (h - x).abs()])?;
    }
    let mut s = Summary::default();
    s.real("max_round_trip_error", worst)
        .flag("membership", member);
    let plot = PlotSpec::lines(
        "Time-one displacement",
        "x",
        &["displacement"],
        "φ(1, x) - x",
    );
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}

fn band_limited(
    rng: &mut ChaCha8Rng,
    grid: PeriodicGrid,
    kmax: usize,
) -> Result<PeriodicFunction, CliError> {
    let coeffs: Vec<(f64, f64, f64)> = (0..=kmax)
        .map(|k| {
            (
                k as f64,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    Ok(PeriodicFunction::from_scalar_fn(grid, |x| {
        coeffs
            .iter()
            .map(|&(k, a, b)| (a * (k * x).cos() + b * (k * x).sin()) / (1.0 + k).powi(2))
            .sum()
    })?)
}

fn sobolev_props(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut rng = seeded(cfg)?;
    let grid = PeriodicGrid::new(cfg.usize("n")?)?;
    let (q, kmax_cap) = (cfg.real("q")?, cfg.usize("kmax")?);
    let constant = grid.embedding_constant(q);
    let fine = 8 * grid.len();
    let mut table = ResultTable::new(
        &[
            "sample",
            "kmax",
            "sup_norm",
            "embedding_bound",
            "sup_ratio",
            "product_ratio",
        ],
        "Sobolev embedding into continuous functions and boundedness of pointwise multiplication",
    );
    let mut holds = true;
    for i in 0..cfg.usize("samples")? {
        let kmax = rng.random_range(1..=kmax_cap);
        let f = band_limited(&mut rng, grid, kmax)?;
        let g = band_limited(&mut rng, grid, kmax)?;
        let interp = f.interpolant();
        let sup = (0..fine)
            .map(|j| interp.eval_scalar(TAU * j as f64 / fine as f64).abs())
            .fold(0.0, f64::max);
        let nf = sobolev_norm(&f, q)?;
        let bound = constant * nf;
        holds &= sup <= bound * (1.0 + 1e-12);
        let product = sobolev_norm(&pointwise_multiply(&f, &g)?, q)? / (nf * sobolev_norm(&g, q)?);
        table.push(vec![
            i as f64,
            kmax as f64,
            sup,
            bound,
            sup / bound,
            product,
        ])?;
    }
    let max =
        |c: &str| -> Result<f64, CliError> { Ok(table.column(c)?.into_iter().fold(0.0, f64::max)) };
    let mut s = Summary::default();
    s.flag("embedding_holds", holds)
        .real("embedding_constant", constant)
        .real("max_sup_ratio", max("sup_ratio")?)
        .real("max_product_ratio", max("product_ratio")?);
    let plot = PlotSpec::lines(
        "Sobolev embedding and products",
        "sample",
        &["sup_ratio", "product_ratio"],
        "ratio",
    )
    .scatter();
    Ok(RunOutput {
        table,
        plot,
        summary: s.0,
    })
}
