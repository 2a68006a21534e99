use serde::{Deserialize, Serialize};

use crate::geometry::{chord_lengths, exit_distance, AffineMap, ConvexBody};
use crate::linalg::bisect_root;
use crate::{Error, Result};

/// A body together with the point and direction at which its bound is attained.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SharpBody {
    pub body: ConvexBody,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// Shear of the planar construction, or 0.
    pub alpha: f64,
    pub mu: f64,
    /// Largest deviation of the measured parameters from the requested ones.
    pub round_trip_error: f64,
}

/// Heights `(m₁, m₂)` below and above the axis where the line `x = −αy + 2 − δ` meets the
/// circle of radius 2.
fn heights(alpha: f64, delta: f64) -> (f64, f64) {
    let s = (4.0 * alpha * alpha + 4.0 * delta - delta * delta).sqrt();
    let t = alpha * (2.0 - delta);
    let q = 1.0 + alpha * alpha;
    ((s - t) / q, (s + t) / q)
}

/// Sheared and squeezed disc of radius 2, hulled with the unit disc, whose exit distance
/// along `e₁` from `(2 − δ, 0)` is `δ` and whose chords are `l₁` below and `l₂` above.
fn sheared_disc(delta: f64, l1: f64, l2: f64) -> Result<(Vec<ConvexBody>, f64, f64)> {
    let (lo, hi) = (l1.min(l2), l1.max(l2));
    let target = hi / lo;
    let ratio = |a: f64| {
        let (m1, m2) = heights(a, delta);
        m2 / m1
    };
    if ratio(1.0) < target {
        return Err(Error::ParameterOutOfRange(format!("chord ratio {target} is not reachable for delta = {delta}")));
    }
    let alpha = if target == 1.0 { 0.0 } else { bisect_root(|a| ratio(a) - target, 0.0, 1.0, 1e-12) };
    // μ m₁ = lo and μ m₂ = hi; note m₁ m₂ = δ(4 − δ)/(1 + α²).
    let mu = lo / heights(alpha, delta).0;
    let flip = if l1 <= l2 { 1.0 } else { -1.0 };
    let t = AffineMap::from_rows(&[&[1.0, alpha], &[0.0, flip * mu]], &[0.0, 0.0]);
    let big = ConvexBody::ball(vec![0.0, 0.0], 2.0)?;
    Ok((vec![ConvexBody::unit_ball(2), ConvexBody::affine(t, big)?], alpha, mu))
}

/// Planar body with prescribed `(δ, l₁, l₂)` at `x = (2 − δ, 0)`, `u = e₁`, containing the unit
/// disc and contained in the disc of radius 4.
pub fn sharpness_body_2d(delta: f64, l1: f64, l2: f64) -> Result<SharpBody> {
    if !(delta > 0.0 && 10.0 * delta < l1 && 10.0 * delta < l2 && l1 < 0.1 && l2 < 0.1) {
        return Err(Error::ParameterOutOfRange(format!(
            "need 10·delta < l1, l2 < 1/10, got delta = {delta}, l1 = {l1}, l2 = {l2}"
        )));
    }
    let (parts, points, alpha, mu) = if l1 * l2 <= delta {
        let (parts, alpha, mu) = sheared_disc(delta, l1, l2)?;
        (parts, vec![], alpha, mu)
    } else {
        // Build a body with chord product δ and extend its chords with extra points on the
        // line through x. The shear tilts the supporting line at the exit point towards the
        // shorter chord, so only a longer side (or either side when symmetric) may be extended.
        let rt = delta.sqrt();
        let (b1, b2) = if l1 <= rt {
            (l1, delta / l1)
        } else if l2 <= rt {
            (delta / l2, l2)
        } else {
            (rt, rt)
        };
        let (parts, alpha, mu) = sheared_disc(delta, b1, b2)?;
        let mut pts = Vec::new();
        if l2 > b2 {
            pts.push(vec![2.0 - delta, l2]);
        }
        if l1 > b1 {
            pts.push(vec![2.0 - delta, -l1]);
        }
        (parts, pts, alpha, mu)
    };
    let body = ConvexBody::hull(parts, points)?;
    let x = vec![2.0 - delta, 0.0];
    let u = vec![1.0, 0.0];
    let d_meas = exit_distance(&body, &x, &u)?;
    let (m1, m2) = chord_lengths(&body, &x, &u)?;
    let err = (d_meas - delta).abs().max((m1 - l1).abs()).max((m2 - l2).abs());
    if err > 1e-6 {
        return Err(Error::RoundTripFailed(format!(
            "measured (delta, l1, l2) = ({d_meas}, {m1}, {m2}) for ({delta}, {l1}, {l2})"
        )));
    }
    for k in 0..720 {
        let th = std::f64::consts::TAU * k as f64 / 720.0;
        let h = body.support(&[th.cos(), th.sin()]);
        if !(1.0 - 1e-12..=4.0).contains(&h) {
            return Err(Error::RoundTripFailed(format!("support {h} outside [1, 4]")));
        }
    }
    Ok(SharpBody { body, x, u, alpha, mu, round_trip_error: err })
}

/// `(d−1)`-volume of the unit ball of dimension `d − 1`.
fn omega(d: usize) -> f64 {
    match d {
        2 => 2.0,
        3 => std::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// Default `(β₁, β₂)` for the admissible window `β₁ δ^{d−1} < v < β₂`.
pub fn nd_betas(d: usize) -> (f64, f64) {
    let w = omega(d);
    (1.5 * 2f64.powi(d as i32 - 1) * w, 0.9 * w)
}

/// Body with exit distance `δ` at `x = (2 − δ, 0, …)` along `e₁` and section volume `v`
/// there, containing the unit ball and contained in the ball of radius 3. Rotationally
/// symmetric about the first axis for `d = 3`.
pub fn sharpness_body_nd(delta: f64, v: f64, d: usize, betas: Option<(f64, f64)>) -> Result<SharpBody> {
    if !(d == 2 || d == 3) {
        return Err(Error::Unsupported(format!("sharpness bodies in dimension {d}")));
    }
    let (b1, b2) = betas.unwrap_or_else(|| nd_betas(d));
    if !(delta > 0.0 && delta < 0.5 && b1 * delta.powi(d as i32 - 1) < v && v < b2) {
        return Err(Error::ParameterOutOfRange(format!(
            "need {b1}·delta^{} < v < {b2} and delta < 1/2, got delta = {delta}, v = {v}",
            d - 1
        )));
    }
    let s = (delta * (4.0 - delta)).sqrt();
    let w = omega(d);
    let mu = (v / w).powf(1.0 / (d - 1) as f64) / s;
    let section = if mu <= 1.0 {
        let t = AffineMap::diagonal(&[1.0, mu]);
        let big = ConvexBody::affine(t, ConvexBody::ball(vec![0.0, 0.0], 2.0)?)?;
        ConvexBody::hull(vec![ConvexBody::unit_ball(2), big], vec![])?
    } else {
        let rho = mu * s;
        ConvexBody::hull(
            vec![ConvexBody::ball(vec![0.0, 0.0], 2.0)?],
            vec![vec![2.0 - delta, rho], vec![2.0 - delta, -rho]],
        )?
    };
    let body = if d == 2 { section } else { ConvexBody::revolution(section, 0)? };
    let mut x = vec![0.0; d];
    x[0] = 2.0 - delta;
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let d_meas = exit_distance(&body, &x, &u)?;
    let mut e2 = vec![0.0; d];
    e2[1] = 1.0;
    let rho = exit_distance(&body, &x, &e2)?;
    let v_meas = w * rho.powi(d as i32 - 1);
    let err = (d_meas - delta).abs().max((v_meas - v).abs() / v);
    if err > 1e-6 {
        return Err(Error::RoundTripFailed(format!("measured (delta, v) = ({d_meas}, {v_meas}) for ({delta}, {v})")));
    }
    let probe = |dir: &[f64]| body.support(dir);
    for k in 0..360 {
        let th = std::f64::consts::TAU * k as f64 / 360.0;
        let mut dir = vec![0.0; d];
        dir[0] = th.cos();
        dir[1] = th.sin();
        let h = probe(&dir);
        if !(1.0 - 1e-12..=3.0).contains(&h) {
            return Err(Error::RoundTripFailed(format!("support {h} outside [1, 3]")));
        }
    }
    Ok(SharpBody { body, x, u, alpha: 0.0, mu, round_trip_error: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_heights() {
        let (m1, m2) = heights(0.0, 0.04);
        let expect = (0.04f64 * 3.96).sqrt();
        assert!((m1 - expect).abs() < 1e-15 && (m2 - expect).abs() < 1e-15);
        assert!((expect - 0.39799).abs() < 1e-5);
        for a in [0.1, 0.5, 1.0] {
            let (m1, m2) = heights(a, 0.04);
            assert!((m1 * m2 - 0.04 * 3.96 / (1.0 + a * a)).abs() < 1e-14);
            // Both ends lie on the circle of radius 2.
            for y in [-m1, m2] {
                let x: f64 = -a * y + 2.0 - 0.04;
                assert!((x * x + y * y - 4.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn planar_round_trip_both_cases() {
        for (d, l1, l2) in [(0.002, 0.03, 0.05), (0.002, 0.05, 0.03), (0.001, 0.06, 0.08), (0.004, 0.05, 0.05), (0.002, 0.09, 0.03), (0.003, 0.04, 0.09)] {
            let sb = sharpness_body_2d(d, l1, l2).unwrap();
            assert!(sb.round_trip_error <= 1e-6);
        }
        assert!(matches!(sharpness_body_2d(0.01, 0.05, 0.05), Err(Error::ParameterOutOfRange(_))));
    }

    #[test]
    fn nd_mu_example_and_cases() {
        let sb = sharpness_body_nd(0.1, 0.5, 2, Some((0.0, 10.0))).unwrap();
        assert!((sb.mu - 0.5 / (0.39f64.sqrt() * 2.0)).abs() < 1e-15);
        assert!((sb.mu - 0.4003).abs() < 1e-4);
        for (delta, v) in [(0.02, 0.02), (0.02, 1.0), (0.05, 1.5)] {
            let sb = sharpness_body_nd(delta, v, 3, None).unwrap();
            assert!(sb.round_trip_error <= 1e-6);
        }
        let big = sharpness_body_nd(0.05, 1.5, 3, None).unwrap();
        assert!(big.mu > 1.0);
    }
}
