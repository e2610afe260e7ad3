//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero when a criterion outside [`KNOWN_RED`] fails.
//!
//! Set `SHAPEGEO_STRICT=1` to make known-red criteria fatal as well.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapegeo_core::curves::{
    default_vanishing_levels, l2_metric, l2_metric_variation, sawtooth_initial_path,
    vanishing_distance_experiment, VanishingMetric,
};
use shapegeo_core::diffeo::{
    compose, conjugate_to_rotation, exp_noninjectivity_demo, flow_autonomous, flow_time_dependent,
    flow_time_dependent_from, membership_check, quadratic_blowup, sup_distance, FieldDomain,
    TimeInterpolation,
};
use shapegeo_core::geodesics::{
    bvp_minimize, distance_estimate, energy_gradient, ivp_shoot, path_energy, path_length,
    DistanceStrategy,
};
use shapegeo_core::hilbert::{grossman_experiment, sphere_distance_analytic};
use shapegeo_core::kernels::{admissibility_bound_check, gram_assemble, induced_metric};
use shapegeo_core::periodic::{sobolev_inner_product, sobolev_inner_product_integer, sobolev_norm};
use shapegeo_core::{
    BvpOptions, CircleDiffeo, CircleField, Curve, EllipsoidSpec, Kernel, L2CurveOracle,
    LandmarkConfig, LandmarkOracle, LineGrid, MetricOracle, Path, PeriodicFunction, PeriodicGrid,
    SphereOracle, TimeDependentField,
};

/// Criteria whose failure is documented and does not fail the build.
const KNOWN_RED: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unit(r: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Random smooth `d`-valued function with modes `|k| ≤ kmax`.
fn random_band_limited(
    r: &mut ChaCha8Rng,
    grid: PeriodicGrid,
    d: usize,
    kmax: usize,
    amp: f64,
) -> PeriodicFunction {
    let coeffs: Vec<(usize, usize, f64, f64)> = (0..d)
        .flat_map(|c| (0..=kmax).map(move |k| (c, k)))
        .map(|(c, k)| (c, k, r.random_range(-amp..amp), r.random_range(-amp..amp)))
        .collect();
    PeriodicFunction::from_fn(grid, d, |th, out| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(c, k, a, b) in &coeffs {
            let s = 1.0 / (1.0 + k as f64).powi(2);
            out[c] += s * (a * (k as f64 * th).cos() + b * (k as f64 * th).sin());
        }
    })
    .unwrap()
}

fn random_curve(r: &mut ChaCha8Rng, grid: PeriodicGrid) -> Curve {
    let bump = random_band_limited(r, grid, 2, 4, 0.15);
    let circle = PeriodicFunction::from_fn(grid, 2, |th, out| {
        out[0] = th.cos();
        out[1] = th.sin();
    })
    .unwrap();
    Curve::new(circle.add_scaled(1.0, &bump).unwrap()).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn c1_grossman() -> Outcome {
    let t = Instant::now();
    let spec = EllipsoidSpec::default();
    let ns: Vec<usize> = (1..=20).collect();
    let rows = match grossman_experiment(&spec, &ns) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let tol = 1e-9;
    let bounded = rows
        .iter()
        .all(|r| r.length > PI && r.length <= (1.0 + 0.5f64.powi(r.n as i32)) * PI + tol);
    let decreasing = rows.windows(2).all(|w| w[1].length < w[0].length);
    let secs = t.elapsed().as_secs_f64();
    let last = rows.last().unwrap();
    Outcome::new(
        bounded && decreasing && secs < 5.0,
        format!(
            "m = 24, n = 1..20, Len(n=20) - π = {:.3e}, decreasing = {decreasing}, {secs:.2} s",
            last.length - PI
        ),
    )
}

fn c2_sphere() -> Outcome {
    let t = Instant::now();
    let mut r = rng(2);
    let m = 10;
    let strategy = DistanceStrategy::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = random_unit(&mut r, m);
        let y = random_unit(&mut r, m);
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
        match distance_estimate(&zx, &zy, &o, &strategy) {
            Ok(d) => worst = worst.max((d - sphere_distance_analytic(&x, &y).unwrap()).abs()),
            Err(e) => return Outcome::new(false, e.to_string()),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(
        worst < 1e-3 && secs < 30.0,
        format!("20 pairs, m = 10, worst |d - arccos| = {worst:.3e}, {secs:.2} s"),
    )
}

fn c3_vanishing() -> Outcome {
    let levels = default_vanishing_levels();
    let (l2, flat) = match (
        vanishing_distance_experiment(&levels, VanishingMetric::L2),
        vanishing_distance_experiment(&levels, VanishingMetric::Euclidean),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::new(false, e.to_string()),
    };
    let decreasing = l2.windows(2).all(|w| w[1].length < w[0].length);
    let chord = 0.5 * TAU.sqrt();
    let pinned = flat.iter().all(|r| (r.length - chord).abs() <= 1e-9);
    let lens: Vec<String> = l2
        .iter()
        .map(|r| format!("k={}: {:.4}", r.k, r.length))
        .collect();
    Outcome::new(
        decreasing && pinned,
        format!(
            "L² lengths [{}], Euclidean control pinned = {pinned}",
            lens.join(", ")
        ),
    )
}

fn c4_metric_variation() -> Outcome {
    let mut r = rng(4);
    let grid = PeriodicGrid::new(64).unwrap();
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = random_curve(&mut r, grid);
        let l = random_band_limited(&mut r, grid, 2, 6, 1.0);
        let h = random_band_limited(&mut r, grid, 2, 6, 1.0);
        let k = random_band_limited(&mut r, grid, 2, 6, 1.0);
        let shifted = |s: f64| Curve::new(c.pos().add_scaled(s, &l).unwrap()).unwrap();
        let fd = (l2_metric(&shifted(eps), &h, &k).unwrap()
            - l2_metric(&shifted(-eps), &h, &k).unwrap())
            / (2.0 * eps);
        let an = l2_metric_variation(&c, &l, &h, &k).unwrap();
        worst = worst.max(rel_err(an, fd));
    }
    Outcome::new(
        worst < 1e-6,
        format!("100 configurations, worst relative error {worst:.3e}"),
    )
}

/// Largest relative error of `⟨∇E, δ⟩` against a central difference, and
/// whether `Len² ≤ 2E` held on every path evaluated.
fn gradient_check<M: MetricOracle>(
    oracle: &M,
    path: &Path,
    r: &mut ChaCha8Rng,
    trials: usize,
) -> (f64, bool) {
    let grad = energy_gradient(path, oracle, false).unwrap();
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut cs = true;
    let mut check_cs = |p: &Path| {
        let (l, e) = (
            path_length(p, oracle).unwrap(),
            path_energy(p, oracle).unwrap(),
        );
        cs &= l * l <= 2.0 * e + 1e-9;
    };
    check_cs(path);
    for _ in 0..trials {
        let dir: Vec<Vec<f64>> = (1..path.n_steps())
            .map(|_| (0..path.dim()).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let moved = |s: f64| {
            let mut pts = path.points().to_vec();
            for (p, d) in pts[1..].iter_mut().zip(&dir) {
                p.iter_mut().zip(d).for_each(|(a, b)| *a += s * b);
            }
            Path::new(pts).unwrap()
        };
        let (plus, minus) = (moved(eps), moved(-eps));
        check_cs(&plus);
        check_cs(&minus);
        let fd = (path_energy(&plus, oracle).unwrap() - path_energy(&minus, oracle).unwrap())
            / (2.0 * eps);
        let an: f64 = grad
            .iter()
            .zip(&dir)
            .map(|(g, d)| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        worst = worst.max(rel_err(an, fd));
    }
    (worst, cs)
}

fn c5_energy_gradient() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    let mut cs = true;
    let mut absorb = |(w, c): (f64, bool)| {
        worst = worst.max(w);
        cs &= c;
    };
    // curves: perturbed sawtooth homotopies
    let grid = PeriodicGrid::new(32).unwrap();
    for k in [1, 3] {
        let base = sawtooth_initial_path(grid, [0.5, 0.0], k, 6).unwrap();
        let pts = base
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let inner = i > 0 && i < base.n_steps();
                p.iter()
                    .map(|v| {
                        v + if inner {
                            r.random_range(-0.02..0.02)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        absorb(gradient_check(
            &L2CurveOracle::new(grid, 2),
            &Path::new(pts).unwrap(),
            &mut r,
            10,
        ));
    }
    // sphere chart: random wiggled paths
    for _ in 0..5 {
        let (x, y) = (random_unit(&mut r, 6), random_unit(&mut r, 6));
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
        let base = Path::linear(&zx, &zy, 12).unwrap();
        let pts = base
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let inner = i > 0 && i < 12;
                p.iter()
                    .map(|v| {
                        v + if inner {
                            r.random_range(-0.05..0.05)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        absorb(gradient_check(&o, &Path::new(pts).unwrap(), &mut r, 10));
    }
    // Gaussian landmarks
    let lm = LandmarkOracle::new(Kernel::gaussian(1.0).unwrap(), 3, 2);
    let (a, b) = (
        vec![0.0, 0.0, 1.0, 0.2, -0.5, 1.0],
        vec![0.3, 0.4, 1.2, -0.3, -0.2, 1.5],
    );
    absorb(gradient_check(
        &lm,
        &Path::linear(&a, &b, 8).unwrap(),
        &mut r,
        10,
    ));
    Outcome::new(
        worst < 1e-6 && cs,
        format!("worst relative error {worst:.3e}, Len² ≤ 2E on all paths = {cs}"),
    )
}

fn c6_exponential_map() -> Outcome {
    let grid = PeriodicGrid::new(256).unwrap();
    let u = CircleField::from_fn(grid, |x| 1.0 + 0.5 * x.sin()).unwrap();
    let (eta, c) = match conjugate_to_rotation(&u) {
        Ok(v) => v,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let c_ok = (c - 0.75f64.sqrt()).abs() <= 1e-9;
    let mut conj_err = 0.0f64;
    for t in [0.3, 1.0, 2.5] {
        let flow = flow_autonomous(&u, t).unwrap();
        let lhs = compose(&eta, &flow).unwrap();
        let rhs = compose(&CircleDiffeo::rotation(grid, c * t), &eta).unwrap();
        conj_err = conj_err.max(sup_distance(&lhs, &rhs).unwrap());
    }
    let psi = CircleDiffeo::from_lift(grid, |x| x + 0.2 * (3.0 * x).sin()).unwrap();
    let (u1, e1) = exp_noninjectivity_demo(&CircleDiffeo::identity(grid), 3).unwrap();
    let (u2, e2) = exp_noninjectivity_demo(&psi, 3).unwrap();
    let apart = u1
        .values()
        .values()
        .iter()
        .zip(u2.values().values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let pass = c_ok && conj_err < 1e-6 && apart > 0.01 && e1.max(e2) < 1e-6;
    Outcome::new(
        pass,
        format!(
            "c - √0.75 = {:.1e}, conjugation error {conj_err:.2e}, fields {apart:.3} apart, flow errors {e1:.1e}/{e2:.1e}",
            c - 0.75f64.sqrt()
        ),
    )
}

fn c7_blowup() -> Outcome {
    let r = quadratic_blowup(2.0, 1.0);
    match r.blow_up_time {
        Some(t) if r.blow_up => {
            Outcome::new((t - 0.5).abs() <= 1e-3, format!("blow-up at t = {t:.6}"))
        }
        _ => Outcome::new(false, "no blow-up reported"),
    }
}

/// `min ‖X‖²_H` over `X = Σ_a K(·, z_a) a_a` with `X(q_i) = h_i`, where the
/// centres `z` are the landmarks plus extra points; solved through its KKT system.
fn qp_infimum(kernel: &Kernel, q: &LandmarkConfig, extra: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    let z: Vec<&Vec<f64>> = q.points().iter().chain(extra).collect();
    let (n, nz) = (q.len(), z.len());
    let mut kkt = DMatrix::zeros(nz + n, nz + n);
    for a in 0..nz {
        for b in 0..nz {
            kkt[(a, b)] = kernel.eval(z[a], z[b]);
        }
        for i in 0..n {
            let v = kernel.eval(&q.points()[i], z[a]);
            kkt[(nz + i, a)] = v;
            kkt[(a, nz + i)] = v;
        }
    }
    let lu = kkt.lu();
    // components decouple: the kernel is scalar times identity
    (0..q.dim())
        .map(|c| {
            let mut rhs = DVector::zeros(nz + n);
            for i in 0..n {
                rhs[nz + i] = h[i][c];
            }
            let sol = lu.solve(&rhs).unwrap();
            let coef = sol.rows(0, nz);
            let mut e = 0.0;
            for a in 0..nz {
                for b in 0..nz {
                    e += coef[a] * coef[b] * kernel.eval(z[a], z[b]);
                }
            }
            e
        })
        .sum()
}

fn random_config(r: &mut ChaCha8Rng, n: usize, d: usize, spread: f64) -> LandmarkConfig {
    loop {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-spread..spread)).collect())
            .collect();
        if let Ok(q) = LandmarkConfig::new(pts) {
            if q.min_separation() > 0.05 {
                return q;
            }
        }
    }
}

fn c8_kernel_metric() -> Outcome {
    let mut r = rng(8);
    let mut spd = 0;
    let mut bound_ok = true;
    for i in 0..1000 {
        let kernel = match i % 3 {
            0 => Kernel::gaussian(r.random_range(0.3..2.0)).unwrap(),
            1 => Kernel::sobolev(1, r.random_range(0.3..2.0)).unwrap(),
            _ => Kernel::sobolev(2, r.random_range(0.3..2.0)).unwrap(),
        };
        let (n, d) = (r.random_range(1..=8), r.random_range(1..=3));
        let q = random_config(&mut r, n, d, 2.0);
        if let Ok(g) = gram_assemble(&kernel, &q) {
            if g.min_eigenvalue() > 0.0 {
                spd += 1;
            }
        }
        let h: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let (lhs, rhs) = admissibility_bound_check(&kernel, &q, &h).unwrap();
        bound_ok &= lhs <= rhs * (1.0 + 1e-12);
    }
    let mut qp_err = 0.0f64;
    for n in 1..=5 {
        for _ in 0..10 {
            let kernel = Kernel::gaussian(r.random_range(0.5..1.5)).unwrap();
            let q = random_config(&mut r, n, 2, 1.5);
            let extra = random_config(&mut r, 3, 2, 1.5).points().to_vec();
            let h: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..2).map(|_| r.random_range(-1.0..1.0)).collect())
                .collect();
            let g = induced_metric(&kernel, &q, &h, &h).unwrap();
            qp_err = qp_err.max(rel_err(g, qp_infimum(&kernel, &q, &extra, &h)));
        }
    }
    let mut perm_err = 0.0f64;
    let oracle = LandmarkOracle::new(Kernel::gaussian(1.0).unwrap(), 3, 2);
    let strategy = DistanceStrategy {
        n_steps: 16,
        options: BvpOptions::default(),
    };
    for _ in 0..3 {
        let a = random_config(&mut r, 3, 2, 1.0);
        let b: Vec<Vec<f64>> = a
            .points()
            .iter()
            .map(|p| p.iter().map(|v| v + r.random_range(-0.3..0.3)).collect())
            .collect();
        let flat = |pts: &[Vec<f64>], order: [usize; 3]| -> Vec<f64> {
            order.iter().flat_map(|&i| pts[i].clone()).collect()
        };
        let d0 = distance_estimate(
            &flat(a.points(), [0, 1, 2]),
            &flat(&b, [0, 1, 2]),
            &oracle,
            &strategy,
        )
        .unwrap();
        let d1 = distance_estimate(
            &flat(a.points(), [2, 0, 1]),
            &flat(&b, [2, 0, 1]),
            &oracle,
            &strategy,
        )
        .unwrap();
        perm_err = perm_err.max((d0 - d1).abs());
    }
    let pass = spd == 1000 && qp_err < 1e-8 && bound_ok && perm_err < 1e-8;
    Outcome::new(
        pass,
        format!("SPD {spd}/1000, QP relative error {qp_err:.2e}, bound holds = {bound_ok}, permutation error {perm_err:.1e}"),
    )
}

fn c9_flow_group() -> Outcome {
    let knots: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let line = LineGrid::default();
    let mut worst = 0.0f64;
    let mut member = true;
    let fields = [
        |t: f64, x: f64| (0.5 + t) * (-x * x).exp() * x.sin(),
        |t: f64, x: f64| (1.0 - 2.0 * t) * (-(x - 1.0).powi(2) / 2.0).exp(),
    ];
    for f in fields {
        for interp in [
            TimeInterpolation::PiecewiseLinear,
            TimeInterpolation::PiecewiseConstant,
        ] {
            let u = TimeDependentField::from_fn(FieldDomain::Line(line), knots.clone(), interp, f)
                .unwrap();
            let fwd = flow_time_dependent(&u).unwrap();
            let back = flow_time_dependent_from(
                &u.time_reversed().unwrap(),
                fwd.final_map.as_ref().unwrap(),
            )
            .unwrap();
            let end = back.final_map.as_ref().unwrap();
            worst = worst.max(
                end.iter()
                    .zip(line.nodes())
                    .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
            );
            for disp in [
                fwd.displacement(&line).unwrap(),
                back.displacement(&line).unwrap(),
            ] {
                member &= membership_check(&line, &disp).unwrap_or(false);
            }
        }
    }
    let grid = PeriodicGrid::new(64).unwrap();
    let u = TimeDependentField::from_fn(
        FieldDomain::Circle(grid),
        knots,
        TimeInterpolation::PiecewiseLinear,
        |t, x| 0.4 * (x + t).sin() + 0.3,
    )
    .unwrap();
    let fwd = flow_time_dependent(&u)
        .unwrap()
        .to_circle_diffeo(grid)
        .unwrap();
    let back = flow_time_dependent(&u.time_reversed().unwrap())
        .unwrap()
        .to_circle_diffeo(grid)
        .unwrap();
    worst = worst.max(
        sup_distance(
            &compose(&back, &fwd).unwrap(),
            &CircleDiffeo::identity(grid),
        )
        .unwrap(),
    );
    Outcome::new(
        worst < 1e-6 && member,
        format!("round-trip sup error {worst:.2e}, membership = {member}"),
    )
}

fn c10_sobolev() -> Outcome {
    let grid = PeriodicGrid::new(64).unwrap();
    let mut exact = 0.0f64;
    let mut ratio = 0.0f64;
    for k in 0..32 {
        for phase in [0.0, 0.7] {
            let f =
                PeriodicFunction::from_scalar_fn(grid, |x| (k as f64 * x + phase).cos()).unwrap();
            for q in [0u32, 1] {
                let a = sobolev_inner_product(&f, &f, q as f64).unwrap();
                let b = sobolev_inner_product_integer(&f, &f, q).unwrap();
                exact = exact.max(rel_err(a, b));
            }
            let kf = k as f64;
            let w = (1.0 + kf * kf).powi(2) / (1.0 + kf.powi(4));
            let a = sobolev_inner_product(&f, &f, 2.0).unwrap();
            let b = sobolev_inner_product_integer(&f, &f, 2).unwrap();
            ratio = ratio.max(rel_err(a / b, w));
        }
    }
    let mut r = rng(10);
    let mut embed_ok = true;
    let mut tightest = 0.0f64;
    for i in 0..500 {
        let q = [0.75, 1.0, 2.0][i % 3];
        let kmax = r.random_range(1..32);
        let f = random_band_limited(&mut r, grid, 1, kmax, 1.0);
        let interp = f.interpolant();
        let sup = (0..8 * grid.len())
            .map(|j| {
                interp
                    .eval_scalar(TAU * j as f64 / (8 * grid.len()) as f64)
                    .abs()
            })
            .fold(0.0, f64::max);
        let bound = grid.embedding_constant(q) * sobolev_norm(&f, q).unwrap();
        embed_ok &= sup <= bound * (1.0 + 1e-12);
        tightest = tightest.max(sup / bound);
    }
    let pass = exact < 1e-12 && ratio < 1e-12 && embed_ok;
    Outcome::new(
        pass,
        format!("q∈{{0,1}} mismatch {exact:.1e}, q=2 ratio error {ratio:.1e}, embedding holds = {embed_ok} (max sup/bound {tightest:.3})"),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("SHAPEGEO_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "Grossman ellipsoid lengths", c1_grossman),
        (2, "sphere geodesic distance", c2_sphere),
        (3, "vanishing L² distance", c3_vanishing),
        (4, "metric variation gradient", c4_metric_variation),
        (5, "path energy gradient", c5_energy_gradient),
        (6, "exponential map constructions", c6_exponential_map),
        (7, "blow-up time", c7_blowup),
        (8, "kernel metric", c8_kernel_metric),
        (9, "flow group property", c9_flow_group),
        (10, "Sobolev forms and embedding", c10_sobolev),
    ];
    let mut fatal = 0;
    for (id, name, check) in criteria {
        let t = Instant::now();
        let out = check();
        let known = KNOWN_RED.contains(&id);
        let verdict = match (out.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "{verdict:<12} {id:>2}. {name}: {} [{:.2} s]",
            out.detail,
            t.elapsed().as_secs_f64()
        );
        if !out.pass && (!known || strict) {
            fatal += 1;
        }
    }
    // the consistency invariant rides along with criterion 2's oracle
    let shoot = bvp_ivp_consistency();
    println!(
        "{:<12}     BVP/IVP consistency: endpoint error {shoot:.2e}",
        if shoot < 1e-3 { "PASS" } else { "FAIL" }
    );
    if shoot >= 1e-3 {
        fatal += 1;
    }
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn bvp_ivp_consistency() -> f64 {
    let mut r = rng(11);
    (0..5)
        .map(|_| {
            let (x, y) = (random_unit(&mut r, 10), random_unit(&mut r, 10));
            let o = SphereOracle::centred_between(&x, &y).unwrap();
            let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
            let (p, _) = bvp_minimize(
                &zx,
                &zy,
                &o,
                Path::linear(&zx, &zy, 64).unwrap(),
                &BvpOptions::default(),
            )
            .unwrap();
            let shot = ivp_shoot(&zx, &p.initial_velocity(), &o, 256).unwrap();
            shot.end()
                .iter()
                .zip(&zy)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max)
}
