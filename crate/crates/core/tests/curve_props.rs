use proptest::prelude::*;
use shapegeo_core::curves::{
    l2_metric, l2_metric_variation, normal_chart, reparametrize, reparametrize_tangent,
};
use shapegeo_core::{CircleDiffeo, Curve, PeriodicFunction, PeriodicGrid, Reparametrization};

/// Perturbed circle `(1 + Σ ρ_k cos(kθ + p_k)) (cos θ, sin θ)`.
fn star(grid: PeriodicGrid, bumps: &[(usize, f64, f64)]) -> Curve {
    Curve::from_fn(grid, 2, |t, out| {
        let r = 1.0
            + bumps
                .iter()
                .map(|&(k, a, p)| a * (k as f64 * t + p).cos())
                .sum::<f64>();
        out[0] = r * t.cos();
        out[1] = r * t.sin();
    })
    .unwrap()
}

fn field(grid: PeriodicGrid, coef: &[(usize, f64, f64)]) -> PeriodicFunction {
    PeriodicFunction::from_fn(grid, 2, |t, out| {
        out[0] = coef
            .iter()
            .map(|&(k, a, b)| a * (k as f64 * t).cos() + b * (k as f64 * t).sin())
            .sum();
        out[1] = coef
            .iter()
            .map(|&(k, a, b)| b * (k as f64 * t).cos() - a * (k as f64 * t + 0.3).sin())
            .sum();
    })
    .unwrap()
}

fn warp(grid: PeriodicGrid, k: usize, eps: f64, phase: f64) -> Reparametrization {
    Reparametrization(
        CircleDiffeo::from_lift(grid, |x| x + eps * (k as f64 * x + phase).sin()).unwrap(),
    )
}

fn bumps() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((2usize..5, -0.04..0.04f64, 0.0..6.0f64), 0..3)
}

fn coefs() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0usize..5, -1.0..1.0f64, -1.0..1.0f64), 1..4)
}

fn warp_params() -> impl Strategy<Value = (usize, f64, f64)> {
    (1usize..4).prop_flat_map(|k| (Just(k), -0.4 / k as f64..0.4 / k as f64, 0.0..6.0f64))
}

fn reparam_error(
    n: usize,
    b: &[(usize, f64, f64)],
    h: &[(usize, f64, f64)],
    w: (usize, f64, f64),
) -> f64 {
    let grid = PeriodicGrid::new(n).unwrap();
    let c = star(grid, b);
    let hf = field(grid, h);
    let phi = warp(grid, w.0, w.1, w.2);
    let before = l2_metric(&c, &hf, &hf).unwrap();
    let hp = reparametrize_tangent(&hf, &phi).unwrap();
    // the pulled-back tangent carries the Jacobian: ∫|h∘φ|² |(c∘φ)'| = ∫|h|²|c'| with (c∘φ)' = c'∘φ · φ'
    let after = l2_metric(&reparametrize(&c, &phi).unwrap(), &hp, &hp).unwrap();
    (after - before).abs() / before
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_is_reparametrization_invariant(b in bumps(), h in coefs(), w in warp_params()) {
        prop_assert!(reparam_error(256, &b, &h, w) < 1e-5);
        // spectral convergence; intermediate levels may be non-monotone from aliasing
        let (coarse, fine) = (reparam_error(16, &b, &h, w), reparam_error(64, &b, &h, w));
        prop_assert!(fine <= (coarse / 16.0).max(1e-12), "errors {coarse:e} at n = 16, {fine:e} at n = 64");
    }

    #[test]
    fn variation_matches_central_differences(b in bumps(), l in coefs(), h in coefs(), k in coefs()) {
        let grid = PeriodicGrid::new(64).unwrap();
        let c = star(grid, &b);
        let (lf, hf, kf) = (field(grid, &l).scale(0.1), field(grid, &h), field(grid, &k));
        let eps = 1e-5;
        let g = |s: f64| l2_metric(&Curve::new(c.pos().add_scaled(s, &lf).unwrap()).unwrap(), &hf, &kf).unwrap();
        let fd = (g(eps) - g(-eps)) / (2.0 * eps);
        let an = l2_metric_variation(&c, &lf, &hf, &kf).unwrap();
        prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(fd.abs()).max(1e-3));
    }

    #[test]
    fn reparametrized_margin_bound(b in bumps(), w in warp_params()) {
        let grid = PeriodicGrid::new(128).unwrap();
        let c = star(grid, &b);
        let phi = warp(grid, w.0, w.1, w.2);
        let cp = reparametrize(&c, &phi).unwrap();
        // the bound holds for continuous minima; φ moves samples off the nodes, so
        // take both factors from a grid fine enough that sampling error is O(1e-7)
        let fine = PeriodicGrid::new(4096).unwrap();
        let floor = star(fine, &b).margin() * warp(fine, w.0, w.1, w.2).0.min_derivative();
        prop_assert!(cp.margin() >= floor - 1e-6, "margin {} below {floor}", cp.margin());
    }

    #[test]
    fn zero_normal_offset_is_identity(b in bumps()) {
        let grid = PeriodicGrid::new(64).unwrap();
        let c = star(grid, &b);
        let same = normal_chart(&c, &PeriodicFunction::zeros(grid, 1)).unwrap();
        prop_assert_eq!(same.pos().values(), c.pos().values());
    }
}
