use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use shapegeo_core::geodesics::{
    bvp_minimize, distance_estimate, energy_gradient, ivp_shoot, path_energy, path_length,
    DistanceStrategy,
};
use shapegeo_core::hilbert::sphere_distance_analytic;
use shapegeo_core::{
    BvpOptions, EuclideanOracle, Kernel, L2CurveOracle, LandmarkOracle, MetricOracle, Path,
    PeriodicGrid, SphereOracle,
};

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn unit_vector(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, m)
        .prop_filter("away from zero", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 0.05
        })
        .prop_map(|v| unit(&v))
}

/// Two unit vectors at angle in `[0.2, 2.6]`, away from antipodal.
fn sphere_pair(m: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (unit_vector(m), unit_vector(m)).prop_filter("moderate angle", |(x, y)| {
        let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (-0.85..0.98).contains(&c)
    })
}

fn wiggle(path: &Path, amp: &[f64]) -> Path {
    let t = path.n_steps();
    let pts = path
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = if i == 0 || i == t { 0.0 } else { 1.0 };
            p.iter()
                .enumerate()
                .map(|(j, v)| v + s * amp[(i * 7 + j) % amp.len()])
                .collect()
        })
        .collect();
    Path::new(pts).unwrap()
}

fn cauchy_schwarz<M: MetricOracle>(p: &Path, o: &M) -> bool {
    let l = path_length(p, o).unwrap();
    l * l <= 2.0 * path_energy(p, o).unwrap() + 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz_sphere((x, y) in sphere_pair(6), amp in prop::collection::vec(-0.1..0.1f64, 5..13)) {
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let p = Path::linear(&o.to_chart(&x).unwrap(), &o.to_chart(&y).unwrap(), 10).unwrap();
        prop_assert!(cauchy_schwarz(&wiggle(&p, &amp), &o));
    }

    #[test]
    fn cauchy_schwarz_curves(amp in prop::collection::vec(-0.05..0.05f64, 5..13), dx in -1.0..1.0f64) {
        let grid = PeriodicGrid::new(16).unwrap();
        let o = L2CurveOracle::new(grid, 2);
        let circle: Vec<f64> = grid.nodes().iter().map(|t| t.cos()).chain(grid.nodes().iter().map(|t| t.sin())).collect();
        let moved: Vec<f64> = circle.iter().enumerate().map(|(i, v)| if i < 16 { v + dx } else { *v }).collect();
        let p = wiggle(&Path::linear(&circle, &moved, 6).unwrap(), &amp);
        prop_assert!(cauchy_schwarz(&p, &o));
    }

    #[test]
    fn sphere_distance_is_symmetric((x, y) in sphere_pair(5)) {
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
        let s = DistanceStrategy::default();
        let d1 = distance_estimate(&zx, &zy, &o, &s).unwrap();
        let d2 = distance_estimate(&zy, &zx, &o, &s).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bvp_then_ivp_returns_to_endpoint((x, y) in sphere_pair(10)) {
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
        let (p, _) = bvp_minimize(&zx, &zy, &o, Path::linear(&zx, &zy, 64).unwrap(), &BvpOptions::default()).unwrap();
        let shot = ivp_shoot(&zx, &p.initial_velocity(), &o, 256).unwrap();
        let err = shot.end().iter().zip(&zy).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-3, "endpoint error {err}");
    }

    #[test]
    fn sphere_bvp_matches_arccos((x, y) in sphere_pair(10)) {
        let o = SphereOracle::centred_between(&x, &y).unwrap();
        let (zx, zy) = (o.to_chart(&x).unwrap(), o.to_chart(&y).unwrap());
        let d = distance_estimate(&zx, &zy, &o, &DistanceStrategy::default()).unwrap();
        prop_assert!((d - sphere_distance_analytic(&x, &y).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn triangle_inequality_on_sphere(a in unit_vector(4), b in unit_vector(4), c in unit_vector(4)) {
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
        prop_assume!(dot(&a, &b) > -0.8 && dot(&b, &c) > -0.8 && dot(&a, &c) > -0.8);
        let d = |u: &[f64], v: &[f64]| {
            let o = SphereOracle::centred_between(u, v).unwrap();
            distance_estimate(&o.to_chart(u).unwrap(), &o.to_chart(v).unwrap(), &o, &DistanceStrategy::default()).unwrap()
        };
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-3);
    }
}

#[test]
fn gradient_vanishes_on_straight_lines() {
    let o = EuclideanOracle {
        dim: 3,
        weight: 2.5,
    };
    let p = Path::linear(&[0.0, 1.0, -2.0], &[3.0, -1.0, 0.5], 20).unwrap();
    let g = energy_gradient(&p, &o, false).unwrap();
    let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-8, "gradient norm {norm}");
}

#[test]
fn gradient_vanishes_for_single_landmark() {
    // one landmark: G = |h|² / k(0), flat
    let o = LandmarkOracle::new(Kernel::gaussian(0.7).unwrap(), 1, 2);
    let p = Path::linear(&[0.3, -1.0], &[2.0, 0.4], 16).unwrap();
    let g = energy_gradient(&p, &o, false).unwrap();
    let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-8, "gradient norm {norm}");
}

fn arc_gradient_norm(t: usize) -> f64 {
    let o = SphereOracle::new(&[0.0, 0.0, 1.0]).unwrap();
    let arc = |s: f64| {
        let th = (s - 0.5) * 1.2;
        o.to_chart(&[th.sin(), 0.0, th.cos()]).unwrap()
    };
    let p = Path::new((0..=t).map(|i| arc(i as f64 / t as f64)).collect()).unwrap();
    let g = energy_gradient(&p, &o, false).unwrap();
    g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn gradient_on_sampled_great_circle_is_discretization_error() {
    // uniform samples of the arc are critical only up to the quadrature error
    let norms: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&t| arc_gradient_norm(t))
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] < w[0] / 4.0, "gradient norms {norms:?}");
    }
}

#[test]
fn ivp_follows_great_circle() {
    let (e0, e1) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    let o = SphereOracle::centred_between(&e0, &e1).unwrap();
    let v: Vec<f64> = o
        .tangent_to_chart(&e1)
        .unwrap()
        .iter()
        .map(|x| x * FRAC_PI_2)
        .collect();
    let shot = ivp_shoot(&o.to_chart(&e0).unwrap(), &v, &o, 256).unwrap();
    let x = o.from_chart(shot.end()).unwrap();
    let err = x
        .iter()
        .zip(&e1)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 1e-4, "endpoint error {err}");
}
