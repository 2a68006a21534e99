//! Christoffel function `λ_n(D, x) = 1 / (p(x)ᵀ G⁻¹ p(x))` and the reproducing kernel.

mod basis;
mod factor;
mod john;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

pub use basis::{basis_eval, legendre_into, BasisSpec, Frame};
pub use factor::{GramFactor, Precision, CONDITION_WARNING};
pub use john::john_map;

use crate::geometry::{AffineMap, ConvexBody};
use crate::quadrature::{rule_for, IntegrationMethod};
use crate::{Error, Result};

/// Largest supported degree in dimension `d`.
pub fn max_degree(d: usize) -> usize {
    match d {
        1 => 60,
        2 => 32,
        3 => 14,
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub condition: f64,
    pub method: IntegrationMethod,
    pub basis_size: usize,
    /// `x` lies outside the body; the value is still the formula's.
    pub exterior: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelValue {
    pub lambda: f64,
    pub n: usize,
    pub x: Vec<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct EvalOptions {
    pub precision: Precision,
    /// Evaluate on a John-normalised image of the body and transform back.
    pub john: bool,
}

type CacheKey = (String, usize, Precision);
type Slot = Arc<OnceLock<std::result::Result<Arc<GramFactor>, String>>>;

fn cache() -> &'static Mutex<HashMap<CacheKey, Slot>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Slot>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Factorization of the Gram matrix of `body` in degree `n`, computed once per
/// `(body, n, precision)` and shared afterwards.
pub fn gram_factor(body: &ConvexBody, n: usize, precision: Precision) -> Result<Arc<GramFactor>> {
    let d = body.dim();
    if n > max_degree(d) {
        return Err(Error::DegreeTooLarge { degree: n, max: max_degree(d), dim: d });
    }
    let key = (serde_json::to_string(body)?, n, precision);
    let slot = cache().lock().unwrap().entry(key).or_default().clone();
    let res = slot.get_or_init(|| {
        let build = || -> Result<GramFactor> {
            let rule = rule_for(body, 2 * n)?;
            GramFactor::from_rule(BasisSpec::adapted(body, n, &rule), &rule, precision)
        };
        build().map(Arc::new).map_err(|e| e.to_string())
    });
    match res {
        Ok(f) => Ok(f.clone()),
        Err(e) if e == &Error::NotPositiveDefinite.to_string() => Err(Error::NotPositiveDefinite),
        Err(e) => Err(Error::InvalidBody(e.clone())),
    }
}

pub fn christoffel_eval(body: &ConvexBody, n: usize, x: &[f64]) -> Result<ChristoffelValue> {
    christoffel_eval_with(body, n, x, EvalOptions::default())
}

pub fn christoffel_eval_with(body: &ConvexBody, n: usize, x: &[f64], opts: EvalOptions) -> Result<ChristoffelValue> {
    if x.len() != body.dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ParameterOutOfRange("x must be a finite point of the body's dimension".into()));
    }
    if opts.john {
        let t = john_map(body)?;
        let image = ConvexBody::affine(t.clone(), body.clone())?;
        let inner = EvalOptions { john: false, ..opts };
        let mut v = christoffel_eval_with(&image, n, &t.apply(x), inner)?;
        v.lambda /= t.det().abs();
        v.x = x.to_vec();
        return Ok(v);
    }
    let f = gram_factor(body, n, opts.precision)?;
    let k = f.kernel_diag(x);
    Ok(ChristoffelValue { lambda: 1.0 / k, n, x: x.to_vec(), diagnostics: diagnostics(body, &f, x) })
}

/// Evaluate at many points against one factorization.
pub fn christoffel_eval_many(body: &ConvexBody, n: usize, xs: &[Vec<f64>], opts: EvalOptions) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if opts.john {
        return xs.iter().map(|x| christoffel_eval_with(body, n, x, opts).map(|v| v.lambda)).collect();
    }
    let f = gram_factor(body, n, opts.precision)?;
    Ok(xs.par_iter().map(|x| 1.0 / f.kernel_diag(x)).collect())
}

fn diagnostics(body: &ConvexBody, f: &GramFactor, x: &[f64]) -> Diagnostics {
    let mut warnings = Vec::new();
    if f.condition() > CONDITION_WARNING {
        warnings.push(format!("ConditionTooHigh: estimate {:.3e}", f.condition()));
    }
    if f.shifted() {
        warnings.push("Gram factorization needed a diagonal shift".into());
    }
    let exterior = !body.contains(x);
    if exterior {
        warnings.push("x lies outside the body".into());
    }
    Diagnostics { condition: f.condition(), method: f.method(), basis_size: f.size(), exterior, warnings }
}

/// `K_n(x, y) = p(x)ᵀ G⁻¹ p(y)`.
pub fn kernel_eval(body: &ConvexBody, n: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let f = gram_factor(body, n, Precision::Double)?;
    Ok(f.kernel(x, y))
}

/// `λ_n([-1, 1], x)` from the orthonormal Legendre polynomials.
pub fn christoffel_1d(n: usize, x: f64) -> f64 {
    let mut p = vec![0.0; n + 1];
    legendre_into(x, &mut p);
    let s: f64 = p.iter().enumerate().map(|(k, v)| (k as f64 + 0.5) * v * v).sum();
    1.0 / s
}

/// `λ_n(T(D), T(x)) / |det T|`, which equals `λ_n(D, x)`.
pub fn christoffel_via_map(body: &ConvexBody, map: &AffineMap, n: usize, x: &[f64]) -> Result<f64> {
    let image = ConvexBody::affine(map.clone(), body.clone())?;
    Ok(christoffel_eval(&image, n, &map.apply(x))?.lambda / map.det().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gram_matrix, GramBasis};
    use std::f64::consts::PI;

    #[test]
    fn disc_degree_one() {
        let disc = ConvexBody::unit_ball(2);
        assert!((christoffel_eval(&disc, 1, &[0.0, 0.0]).unwrap().lambda - PI).abs() < 1e-12);
        for t in [0.3, -0.7, 0.95] {
            let v = christoffel_eval(&disc, 1, &[t, 0.0]).unwrap().lambda;
            assert!((v - PI / (1.0 + 4.0 * t * t)).abs() < 1e-12);
        }
        let big = ConvexBody::ball(vec![0.0, 0.0], 2.0).unwrap();
        for n in [1, 5, 12] {
            let a = christoffel_eval(&big, n, &[0.0, 0.0]).unwrap().lambda;
            let b = christoffel_eval(&disc, n, &[0.0, 0.0]).unwrap().lambda;
            assert!((a / b - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn one_dimensional_closed_form() {
        assert_eq!(christoffel_1d(0, 0.4), 2.0);
        assert!((christoffel_1d(2, 0.0) - 8.0 / 9.0).abs() < 1e-15);
        for n in [1, 7, 30, 60] {
            assert!((christoffel_1d(n, 1.0) - 2.0 / ((n + 1) * (n + 1)) as f64).abs() < 1e-14);
        }
        let seg = ConvexBody::interval();
        for n in [0, 5, 20, 40] {
            for x in [-1.0, -0.3, 0.0, 0.77] {
                let v = christoffel_eval(&seg, n, &[x]).unwrap().lambda;
                assert!((v / christoffel_1d(n, x) - 1.0).abs() < 1e-11, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn factor_reproduces_gram() {
        for body in [ConvexBody::square(-1.0, 2.0), ConvexBody::lp_ball(1.5, 2).unwrap(), ConvexBody::HalfBall3] {
            let n = 6;
            let rule = rule_for(&body, 2 * n).unwrap();
            let f = GramFactor::from_rule(BasisSpec::for_body(&body, n), &rule, Precision::Double).unwrap();
            let g = gram_matrix(&body, n, GramBasis::Legendre).unwrap();
            let ff = f.factor() * f.factor().transpose();
            let err = (&ff - &g).norm() / g.norm();
            assert!(err < 1e-12, "{body:?}: {err:e}");
        }
    }

    #[test]
    fn adapted_frame_on_sheared_body() {
        let body = ConvexBody::polygon(vec![[0.0, 0.0], [1.0, 0.0], [3.0, 2.0], [2.0, 2.0]]).unwrap();
        let n = 10;
        let rule = rule_for(&body, 2 * n).unwrap();
        let spec = BasisSpec::adapted(&body, n, &rule);
        assert!(spec.frame.is_some());
        let framed = GramFactor::from_rule(spec, &rule, Precision::Double).unwrap();
        let plain = GramFactor::from_rule(BasisSpec::for_body(&body, n), &rule, Precision::Double).unwrap();
        assert!(framed.condition() < 1e-3 * plain.condition());
        // The unit square pulled back by the shear is the reference: λ(TD, Tx) = |det T| λ(D, x).
        let x = [0.5, 0.25];
        let reference = christoffel_eval(&ConvexBody::square(0.0, 1.0), n, &[0.25, 0.125]).unwrap().lambda * 2.0;
        assert!((framed.kernel_diag(&x).recip() - reference).abs() < 1e-11 * reference);
        // Axis-aligned bodies keep the plain box.
        let sq = ConvexBody::square(-1.0, 2.0);
        assert!(BasisSpec::adapted(&sq, 4, &rule_for(&sq, 8).unwrap()).frame.is_none());
    }

    #[test]
    fn kernel_properties() {
        let body = ConvexBody::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.5, 1.0], [0.2, 0.8]]).unwrap();
        let (x, y) = ([0.5, 0.3], [1.2, 0.6]);
        let k = kernel_eval(&body, 5, &x, &y).unwrap();
        assert!((k - kernel_eval(&body, 5, &y, &x).unwrap()).abs() < 1e-12 * k.abs().max(1.0));
        let lam = christoffel_eval(&body, 5, &x).unwrap().lambda;
        assert!((kernel_eval(&body, 5, &x, &x).unwrap() * lam - 1.0).abs() < 1e-10);
        let v = crate::quadrature::body_integral_fn(&body, 5, &|z| kernel_eval(&body, 5, &x, z).unwrap(), &Default::default())
            .unwrap();
        assert!((v.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exterior_points_are_flagged() {
        let v = christoffel_eval(&ConvexBody::unit_ball(2), 3, &[1.5, 0.0]).unwrap();
        assert!(v.diagnostics.exterior);
        assert!(v.lambda > 0.0);
    }

    #[test]
    fn degree_limits() {
        assert!(matches!(
            christoffel_eval(&ConvexBody::unit_ball(3), 15, &[0.0; 3]),
            Err(Error::DegreeTooLarge { max: 14, .. })
        ));
    }

    #[test]
    fn disc_centre_matches_radial_oracle() {
        // Only radial polynomials p(r²) are nonzero at the centre, and ∫_disc p(r²)² = π∫₀¹ p(s)² ds,
        // so K_n(0, 0) = (m + 1)² / π with m = ⌊n/2⌋.
        let disc = ConvexBody::unit_ball(2);
        for (n, tol) in [(4, 1e-13), (10, 1e-12), (17, 1e-10), (24, 1e-8), (32, 1e-5)] {
            let m = (n / 2 + 1) as f64;
            let v = christoffel_eval(&disc, n, &[0.0, 0.0]).unwrap();
            assert!((v.lambda * m * m / PI - 1.0).abs() < tol, "n={n}");
        }
    }

    #[test]
    fn john_normalisation_preserves_lambda() {
        let t = AffineMap::from_rows(&[&[3.0, 1.0], &[0.0, 0.5]], &[1.0, -2.0]);
        let body = ConvexBody::affine(t, ConvexBody::square(-1.0, 1.0)).unwrap();
        let x = [1.2, -2.1];
        let plain = christoffel_eval(&body, 6, &x).unwrap().lambda;
        let opts = EvalOptions { john: true, ..Default::default() };
        let normed = christoffel_eval_with(&body, 6, &x, opts).unwrap().lambda;
        assert!((plain / normed - 1.0).abs() < 1e-9);
    }
}
