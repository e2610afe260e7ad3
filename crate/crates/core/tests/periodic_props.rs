use std::f64::consts::TAU;

use proptest::prelude::*;
use shapegeo_core::periodic::{
    derivative, sobolev_inner_product, sobolev_inner_product_integer, sobolev_norm, sup_norm,
};
use shapegeo_core::{PeriodicFunction, PeriodicGrid};

/// Band-limited `d`-valued function from `(k, a, b)` triples, `k < n/2`.
fn band_limited(grid: PeriodicGrid, d: usize, modes: &[(usize, f64, f64)]) -> PeriodicFunction {
    PeriodicFunction::from_fn(grid, d, |th, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = modes
                .iter()
                .map(|&(k, a, b)| {
                    let kt = k as f64 * th + c as f64;
                    a * kt.cos() + b * kt.sin()
                })
                .sum();
        }
    })
    .unwrap()
}

fn modes(max_k: usize) -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
    prop::collection::vec((0..max_k, -1.0..1.0f64, -1.0..1.0f64), 1..8)
}

fn l2_trapezoid(f: &PeriodicFunction, g: &PeriodicFunction) -> f64 {
    let n = f.grid().len() as f64;
    f.values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * (TAU / n)
        / TAU
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parseval(m1 in modes(32), m2 in modes(32), d in 1usize..3) {
        let grid = PeriodicGrid::new(64).unwrap();
        let (f, g) = (band_limited(grid, d, &m1), band_limited(grid, d, &m2));
        let spectral = sobolev_inner_product(&f, &g, 0.0).unwrap();
        prop_assert!(close(l2_trapezoid(&f, &g), spectral, 1e-10));
    }

    #[test]
    fn embedding_with_explicit_constant(m in modes(32)) {
        let grid = PeriodicGrid::new(64).unwrap();
        let f = band_limited(grid, 1, &m);
        let bound = grid.embedding_constant(1.0) * sobolev_norm(&f, 1.0).unwrap();
        prop_assert!(sup_norm(&f) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn derivative_is_skew(m1 in modes(32), m2 in modes(32)) {
        let grid = PeriodicGrid::new(64).unwrap();
        let (f, g) = (band_limited(grid, 2, &m1), band_limited(grid, 2, &m2));
        let lhs = sobolev_inner_product(&derivative(&f, 1), &g, 0.0).unwrap();
        let rhs = -sobolev_inner_product(&f, &derivative(&g, 1), 0.0).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn forms_are_symmetric_and_bilinear(
        m1 in modes(20), m2 in modes(20), m3 in modes(20),
        a in -2.0..2.0f64, q in 0.0..3.0f64, qi in 0u32..4,
    ) {
        let grid = PeriodicGrid::new(64).unwrap();
        let (f, g, h) = (band_limited(grid, 1, &m1), band_limited(grid, 1, &m2), band_limited(grid, 1, &m3));
        let fa = f.add_scaled(a, &h).unwrap();
        let s = |x: &PeriodicFunction, y: &PeriodicFunction| sobolev_inner_product(x, y, q).unwrap();
        let t = |x: &PeriodicFunction, y: &PeriodicFunction| sobolev_inner_product_integer(x, y, qi).unwrap();
        let scale = 1.0 + s(&f, &f) + s(&g, &g) + s(&h, &h);
        prop_assert!((s(&f, &g) - s(&g, &f)).abs() < 1e-12 * scale);
        prop_assert!((s(&fa, &g) - s(&f, &g) - a * s(&h, &g)).abs() < 1e-11 * scale);
        let tscale = 1.0 + t(&f, &f) + t(&g, &g) + t(&h, &h);
        prop_assert!((t(&f, &g) - t(&g, &f)).abs() < 1e-12 * tscale);
        prop_assert!((t(&fa, &g) - t(&f, &g) - a * t(&h, &g)).abs() < 1e-11 * tscale);
    }

    #[test]
    fn interpolant_resampling_is_exact_for_band_limited(m in modes(16), shift in 0.0..TAU) {
        let grid = PeriodicGrid::new(64).unwrap();
        let f = band_limited(grid, 1, &m);
        let shifted = PeriodicFunction::from_fn(grid, 1, |th, out| {
            out[0] = m.iter().map(|&(k, a, b)| {
                let kt = k as f64 * (th + shift);
                a * kt.cos() + b * kt.sin()
            }).sum();
        }).unwrap();
        let points: Vec<f64> = grid.nodes().iter().map(|x| x + shift).collect();
        let resampled = f.interpolant().resample(grid, &points).unwrap();
        let err = resampled.values().iter().zip(shifted.values()).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        prop_assert!(err < 1e-11);
    }
}
