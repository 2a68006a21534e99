use std::f64::consts::PI;

use proptest::prelude::*;

use christoffel_core::christoffel::{christoffel_1d, christoffel_eval, gram_factor, Precision};
use christoffel_core::constructions::{box_map, sharpness_body_2d, CONTAINMENT_TOL};
use christoffel_core::geometry::{measure, AffineMap, ConvexBody, Polygon};
use christoffel_core::quadrature::{monte_carlo_integral, polygon_moment_exact, to_f64};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Convex polygon from sorted angles and radii around a centre.
fn polygon_strategy() -> impl Strategy<Value = Polygon> {
    (prop::collection::vec((0.0..2.0 * PI, 0.6f64..1.4), 3..8), -1.0f64..1.0, -1.0f64..1.0).prop_filter_map(
        "degenerate polygon",
        |(mut pts, cx, cy)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let v: Vec<[f64; 2]> = pts.iter().map(|(t, r)| [cx + r * t.cos(), cy + r * t.sin()]).collect();
            Polygon::hull_of(&v).ok().filter(|p| p.area() > 0.3)
        },
    )
}

fn centroid_mix(p: &Polygon, w: &[f64]) -> [f64; 2] {
    let v = p.vertices();
    let total: f64 = v.iter().zip(w.iter().cycle()).map(|(_, w)| w).sum();
    let mut x = [0.0; 2];
    for (q, wi) in v.iter().zip(w.iter().cycle()) {
        x[0] += wi / total * q[0];
        x[1] += wi / total * q[1];
    }
    x
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn affine_invariance(
        poly in polygon_strategy(),
        w in prop::collection::vec(0.05f64..1.0, 8),
        m in prop::array::uniform4(-1.5f64..1.5),
        off in prop::array::uniform2(-2.0f64..2.0),
        n in 1usize..8,
    ) {
        prop_assume!((m[0] * m[3] - m[1] * m[2]).abs() > 0.3);
        let t = AffineMap::from_rows(&[&m[0..2], &m[2..4]], &off);
        let x = centroid_mix(&poly, &w);
        let image: Vec<[f64; 2]> = poly.vertices().iter().map(|v| { let y = t.apply(v); [y[0], y[1]] }).collect();
        let a = christoffel_eval(&ConvexBody::polygon(image).unwrap(), n, &t.apply(&x)).unwrap().lambda;
        let b = christoffel_eval(&ConvexBody::Polygon(poly), n, &x).unwrap().lambda * t.det().abs();
        prop_assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }

    #[test]
    fn inclusion_and_degree_monotonicity(
        poly in polygon_strategy(),
        w in prop::collection::vec(0.05f64..1.0, 8),
        shrink in 0.3f64..0.95,
        n in 1usize..10,
    ) {
        let x = centroid_mix(&poly, &w);
        // Shrinking towards x keeps x inside a subset of the polygon.
        let inner: Vec<[f64; 2]> = poly.vertices().iter()
            .map(|v| [x[0] + shrink * (v[0] - x[0]), x[1] + shrink * (v[1] - x[1])]).collect();
        let outer = ConvexBody::Polygon(poly);
        let small = christoffel_eval(&ConvexBody::polygon(inner).unwrap(), n, &x).unwrap().lambda;
        let big = christoffel_eval(&outer, n, &x).unwrap().lambda;
        prop_assert!(small <= big * (1.0 + 1e-10));
        let next = christoffel_eval(&outer, n + 1, &x).unwrap().lambda;
        prop_assert!(next <= big * (1.0 + 1e-10));
    }

    #[test]
    fn lambda_is_the_minimum_over_polynomials(
        poly in polygon_strategy(),
        w in prop::collection::vec(0.05f64..1.0, 8),
        coeffs in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        // Random cubic p with exact ∫p² from rational moments: λ₃(x) ≤ ∫p² / p(x)².
        let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
        let x = centroid_mix(&poly, &w);
        let px: f64 = exps.iter().zip(&coeffs).map(|(&(a, b), c)| c * x[0].powi(a) * x[1].powi(b)).sum();
        prop_assume!(px.abs() > 1e-3);
        let mut l2 = 0.0;
        for (i, &(a, b)) in exps.iter().enumerate() {
            for (j, &(c, d)) in exps.iter().enumerate() {
                let m = to_f64(&polygon_moment_exact(&poly, (a + c) as usize, (b + d) as usize));
                l2 += coeffs[i] * coeffs[j] * m;
            }
        }
        let lam = christoffel_eval(&ConvexBody::Polygon(poly), 3, &x).unwrap().lambda;
        prop_assert!(lam <= l2 / (px * px) * (1.0 + 1e-10));
    }

    #[test]
    fn interval_matches_closed_form(n in 0usize..40, x in -1.0f64..1.0) {
        let lam = christoffel_eval(&ConvexBody::interval(), n, &[x]).unwrap().lambda;
        let reference = christoffel_1d(n, x);
        prop_assert!((lam - reference).abs() <= 1e-10 * reference);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn box_maps_contain_the_body(r in 0.05f64..0.95, th in 0.0f64..2.0 * PI, square in any::<bool>()) {
        let body = if square { ConvexBody::square(-1.0, 1.0) } else { ConvexBody::unit_ball(2) };
        let x = [r * th.cos(), r * th.sin()];
        let meas = measure(&body, &x, None).unwrap();
        let bm = box_map(&body, &meas).unwrap();
        prop_assert!(bm.containment_excess <= CONTAINMENT_TOL);
        let back = bm.map.apply(&bm.y);
        prop_assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
        prop_assert!(bm.y.iter().all(|y| y.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn sharpness_builder_round_trips(delta in 0.001f64..0.004, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let lo = 10.0 * delta * 1.05;
        let (l1, l2) = (lo + a * (0.099 - lo), lo + b * (0.099 - lo));
        let sb = sharpness_body_2d(delta, l1, l2).unwrap();
        prop_assert!(sb.round_trip_error <= 1e-6);
        prop_assert!(sb.body.contains(&sb.x));
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>()) {
        let body = ConvexBody::unit_ball(2);
        let f = |p: &[f64]| 1.0 + p[0] * p[0];
        let a = monte_carlo_integral(&body, &f, 20_000, seed).unwrap();
        let b = monte_carlo_integral(&body, &f, 20_000, seed).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert!((a.value - 1.25 * PI).abs() <= 2.0 * a.abs_error_bound);
    }
}

#[test]
fn extended_precision_agrees_with_double() {
    let body = ConvexBody::lp_ball(1.5, 2).unwrap();
    let d = gram_factor(&body, 12, Precision::Double).unwrap();
    let e = gram_factor(&body, 12, Precision::Extended).unwrap();
    for x in [[0.0, 0.0], [0.7, 0.2], [0.5, -0.5]] {
        let (a, b) = (d.kernel_diag(&x), e.kernel_diag(&x));
        assert!((a - b).abs() < 1e-10 * a);
    }
}
