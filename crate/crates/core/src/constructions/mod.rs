//! Constructive upper bounds: circumscribed parallelotope maps, needle polynomials pulled
//! back through them, the upper-bound right-hand sides, and bodies on which the bounds are sharp.

mod boxmap;
mod sharpness;

use serde::{Deserialize, Serialize};

pub use boxmap::{
    box_map, corner_map_3d, halfspace_box_map, halfspace_box_map_for, inner_ball_behind, max_area_triangle,
    parallelogram_2d, BoxMap, BoxMapKind, CONTAINMENT_SAMPLES, CONTAINMENT_TOL,
};
pub use sharpness::{nd_betas, sharpness_body_2d, sharpness_body_nd, SharpBody};

use crate::christoffel::{christoffel_1d, legendre_into};
use crate::geometry::{measure, ConvexBody, Measurement};
use crate::quadrature::{body_integral_fn, IntegralResult, IntegrationOptions};
use crate::{Error, Result};

/// Explicit polynomial `P = ∏ q_i((T⁻¹ ·)_i)` with `P(x) = 1`, where `q_i` is the normalised
/// Legendre reproducing kernel of degree `m` centred at `y_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: usize,
    pub box_map: BoxMap,
    pub degrees: Vec<usize>,
    /// Legendre coefficients of each `q_i`.
    pub coefficients: Vec<Vec<f64>>,
    pub value_at_x: f64,
    /// `∫_D P²`.
    pub l2sq: IntegralResult,
    /// `|det T| ∏ λ_m([-1,1], y_i)`, the integral of `P²` over the whole parallelotope.
    pub box_bound: f64,
}

impl Certificate {
    pub fn eval(&self, p: &[f64]) -> f64 {
        let z = self.box_map.map.apply_inverse(p);
        let mut leg = Vec::new();
        let mut out = 1.0;
        for (zi, c) in z.iter().zip(&self.coefficients) {
            leg.resize(c.len(), 0.0);
            legendre_into(*zi, &mut leg);
            out *= c.iter().zip(&leg).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }
}

pub fn needle_certificate(body: &ConvexBody, n: usize, bm: &BoxMap) -> Result<Certificate> {
    let d = body.dim();
    if n < d {
        return Err(Error::ParameterOutOfRange(format!("n = {n} is below the dimension {d}")));
    }
    let m = n / d;
    let mut coefficients = Vec::with_capacity(d);
    let mut box_bound = bm.det().abs();
    for &yi in &bm.y {
        let mut p = vec![0.0; m + 1];
        legendre_into(yi, &mut p);
        let kyy: f64 = p.iter().enumerate().map(|(k, v)| (k as f64 + 0.5) * v * v).sum();
        coefficients.push(p.iter().enumerate().map(|(k, v)| (k as f64 + 0.5) * v / kyy).collect());
        box_bound *= christoffel_1d(m, yi);
    }
    let mut cert = Certificate {
        n,
        box_map: bm.clone(),
        degrees: vec![m; d],
        coefficients,
        value_at_x: f64::NAN,
        l2sq: IntegralResult { value: f64::NAN, abs_error_bound: f64::NAN, method: crate::quadrature::IntegrationMethod::ExactRational },
        box_bound,
    };
    cert.value_at_x = cert.eval(&bm.map.apply(&bm.y));
    let c = &cert;
    cert.l2sq = body_integral_fn(body, 2 * d * m, &|p| c.eval(p).powi(2), &IntegrationOptions::default())?;
    Ok(cert)
}

/// Measure at `x` (nearest-boundary direction), build a box map and its needle certificate.
pub fn certify(body: &ConvexBody, x: &[f64], n: usize) -> Result<(Measurement, Certificate)> {
    let meas = measure(body, x, None)?;
    let bm = box_map(body, &meas)?;
    let cert = needle_certificate(body, n, &bm)?;
    Ok((meas, cert))
}

/// Right-hand side of the upper bound without constants: `n⁻² √min{l₁l₂, δ}` in the plane,
/// `n⁻³ min{√δ, δ^{-1/2} Vol₂(section)}` in space.
pub fn bound_rhs(meas: &Measurement, n: usize, sigma: f64) -> Result<f64> {
    let nf = n as f64;
    let delta = meas.delta;
    let threshold = sigma / (nf * nf);
    if delta < threshold {
        return Err(Error::SigmaViolated { delta, threshold });
    }
    match meas.x.len() {
        1 => Ok(delta.sqrt() / nf),
        2 => {
            let l = meas.l1.unwrap_or(f64::INFINITY) * meas.l2.unwrap_or(f64::INFINITY);
            Ok(l.min(delta).sqrt() / (nf * nf))
        }
        3 => Ok(delta.sqrt().min(meas.section_volume / delta.sqrt()) / nf.powi(3)),
        d => Err(Error::Unsupported(format!("bounds in dimension {d}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::christoffel::christoffel_eval;
    use crate::quadrature::gauss_on;

    #[test]
    fn endpoint_needle_norm() {
        for m in [1usize, 3, 9] {
            let mut p = vec![0.0; m + 1];
            legendre_into(1.0, &mut p);
            let kyy: f64 = p.iter().enumerate().map(|(k, v)| (k as f64 + 0.5) * v * v).sum();
            let q = |t: f64| {
                let mut l = vec![0.0; m + 1];
                legendre_into(t, &mut l);
                l.iter().zip(&p).enumerate().map(|(k, (a, b))| (k as f64 + 0.5) * a * b).sum::<f64>() / kyy
            };
            let norm: f64 = gauss_on(m + 2, -1.0, 1.0).iter().map(|(t, w)| w * q(*t).powi(2)).sum();
            assert!((norm - 2.0 / ((m + 1) * (m + 1)) as f64).abs() < 1e-14);
        }
        assert!((christoffel_1d(3, 1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let m = Measurement {
            x: vec![0.0, 0.0],
            u: vec![1.0, 0.0],
            delta: 0.25,
            dist_boundary: 0.25,
            nu: 1.0,
            v_dir: Some(vec![0.0, 1.0]),
            l1: Some(0.5),
            l2: Some(0.5),
            section_volume: 1.0,
        };
        assert!((bound_rhs(&m, 10, 1.0).unwrap() - 0.005).abs() < 1e-16);
        assert!(matches!(bound_rhs(&m, 1, 1.0), Err(Error::SigmaViolated { .. })));
        let wide = Measurement { l1: Some(2.0), l2: Some(2.0), ..m };
        assert!((bound_rhs(&wide, 10, 1.0).unwrap() - 0.25f64.sqrt() / 100.0).abs() < 1e-16);
    }

    #[test]
    fn certificate_chain_on_disc_and_square() {
        for (body, x) in [
            (ConvexBody::unit_ball(2), vec![0.9, 0.05]),
            (ConvexBody::square(-1.0, 1.0), vec![0.95, 0.3]),
            (ConvexBody::unit_ball(2), vec![0.0, 0.0]),
        ] {
            for n in [6, 12] {
                let (_, cert) = certify(&body, &x, n).unwrap();
                let lam = christoffel_eval(&body, n, &x).unwrap().lambda;
                assert!((cert.value_at_x - 1.0).abs() < 1e-9);
                assert!(lam <= cert.l2sq.value * (1.0 + 1e-9), "{lam} {}", cert.l2sq.value);
                assert!(cert.l2sq.value <= cert.box_bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn certificate_on_half_ball() {
        let hb = ConvexBody::HalfBall3;
        let x = [0.9, 0.0, 0.025];
        let (_, cert) = certify(&hb, &x, 9).unwrap();
        let lam = christoffel_eval(&hb, 9, &x).unwrap().lambda;
        assert!(lam <= cert.l2sq.value * (1.0 + 1e-9));
        assert!(cert.l2sq.value <= cert.box_bound * (1.0 + 1e-9));
    }
}
