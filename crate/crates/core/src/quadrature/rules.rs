use std::f64::consts::{FRAC_PI_4, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gauss::gauss_on;
use super::montecarlo::MC_DEFAULT_SEED;
use super::IntegrationMethod;
use crate::geometry::boundary::Piece;
use crate::geometry::{AffineMap, ConvexBody};
use crate::linalg::cross2;
use crate::{Error, Result};

/// Positive-weight cubature: `∫_D f ≈ Σ w_k f(y_k)`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Node coordinates, `dim` per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub method: IntegrationMethod,
}

const BLOCK: usize = 4096;

/// Sample count of the Monte Carlo rule used when a body has no deterministic rule.
pub const MC_RULE_POINTS: usize = 100_000;

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(Σ w f, Σ w |f|)`, summed in fixed blocks so the result does not depend on the
    /// number of worker threads.
    pub fn integrate_with_abs(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> (f64, f64) {
        let blocks: Vec<(f64, f64)> = (0..self.len().div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| {
                let (mut s, mut a) = (0.0, 0.0);
                for k in b * BLOCK..((b + 1) * BLOCK).min(self.len()) {
                    let v = self.weights[k] * f(self.node(k));
                    s += v;
                    a += v.abs();
                }
                (s, a)
            })
            .collect();
        blocks.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1))
    }

    pub fn integrate(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
        self.integrate_with_abs(f).0
    }

    /// Rule for the image body `T(D)`.
    pub fn mapped(&self, map: &AffineMap) -> QuadratureRule {
        let jac = map.det().abs();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for k in 0..self.len() {
            nodes.extend(map.apply(self.node(k)));
        }
        QuadratureRule {
            dim: self.dim,
            nodes,
            weights: self.weights.iter().map(|w| w * jac).collect(),
            method: self.method,
        }
    }
}

/// A rule exact (up to rounding) for polynomials of total degree `degree`, or a Monte
/// Carlo rule for bodies without an explicit boundary description.
pub fn rule_for(body: &ConvexBody, degree: usize) -> Result<QuadratureRule> {
    match body {
        ConvexBody::AffineImage(a) => Ok(rule_for(&a.base, degree)?.mapped(&a.map)),
        _ if body.dim() == 1 => {
            let (lo, hi) = body.bounding_box()[0];
            let pts = gauss_on(degree / 2 + 1, lo, hi);
            Ok(QuadratureRule {
                dim: 1,
                nodes: pts.iter().map(|p| p.0).collect(),
                weights: pts.iter().map(|p| p.1).collect(),
                method: IntegrationMethod::ArcQuadrature,
            })
        }
        ConvexBody::Ball(b) if b.center.len() == 3 => {
            let section = boundary_nodes(&ConvexBody::unit_ball(2).boundary_pieces().unwrap(), [0.0, 0.0], degree + 1, true);
            let unit = spin(&section, [0.0, 0.0], degree, 0);
            let mut m = AffineMap::scaling(3, b.radius);
            m = AffineMap::translation(&b.center).compose(&m);
            Ok(unit.mapped(&m))
        }
        ConvexBody::HalfBall3 => {
            // Meridian section in (x₃, ρ): the half disc z ≥ 0.
            let pieces = vec![
                Piece::Arc { c: [0.0, 0.0], m: [[1.0, 0.0], [0.0, 1.0]], t0: -TAU / 4.0, t1: TAU / 4.0 },
                Piece::Segment { a: [0.0, 1.0], b: [0.0, -1.0] },
            ];
            let center = [0.4, 0.0];
            let section = boundary_nodes(&pieces, center, degree + 1, true);
            Ok(spin(&section, center, degree, 2))
        }
        ConvexBody::Revolution(r) => {
            let c = r.section.interior_point();
            let center = [c[0], 0.0];
            let section = match r.section.as_ref() {
                ConvexBody::LpBall(l) if !matches!(l.alpha, 1.0 | 2.0) => {
                    let mut nodes = lp_boundary_nodes(l.alpha, l.scale, degree + 1);
                    nodes.retain(|(p, _)| p[1] > 0.0);
                    nodes
                }
                s => match s.boundary_pieces() {
                    Some(pieces) => boundary_nodes(&pieces, center, degree + 1, true),
                    None => return monte_carlo_rule(body),
                },
            };
            Ok(spin(&section, center, degree, r.axis))
        }
        ConvexBody::LpBall(l) if l.dim == 2 && !matches!(l.alpha, 1.0 | 2.0) => {
            let b = lp_boundary_nodes(l.alpha, l.scale, degree);
            Ok(polar(&b, [0.0, 0.0], degree))
        }
        _ if body.dim() == 2 => match body.boundary_pieces() {
            Some(pieces) => {
                let c = body.interior_point();
                let center = [c[0], c[1]];
                let b = boundary_nodes(&pieces, center, degree, false);
                Ok(polar(&b, center, degree))
            }
            None => monte_carlo_rule(body),
        },
        _ => monte_carlo_rule(body),
    }
}

/// Boundary nodes `(p, ω)` with `ω = w · (p − c) × p'`, for integrands of degree `degree`
/// in the polar Green formula around `c`. With `upper_only`, pieces are split at the axis
/// `y = 0` and only those with `y > 0` are kept.
fn boundary_nodes(pieces: &[Piece], c: [f64; 2], degree: usize, upper_only: bool) -> Vec<([f64; 2], f64)> {
    let m_seg = (degree + 2).div_ceil(2);
    let m_arc = (degree + 16).div_ceil(2);
    let mut out = Vec::new();
    let pieces: Vec<Piece> = if upper_only {
        pieces
            .iter()
            .flat_map(|p| p.split_at_axis())
            .filter(|p| {
                let (lo, hi) = p.range();
                p.point(0.5 * (lo + hi))[1] > 0.0
            })
            .collect()
    } else {
        pieces.to_vec()
    };
    for piece in &pieces {
        let mut push = |t: f64, w: f64| {
            let p = piece.point(t);
            let dp = piece.tangent(t);
            out.push((p, w * cross2([p[0] - c[0], p[1] - c[1]], dp)));
        };
        match piece {
            Piece::Segment { .. } => {
                for (t, w) in gauss_on(m_seg, 0.0, 1.0) {
                    push(t, w);
                }
            }
            Piece::Arc { t0, t1, .. } => {
                let k = ((t1 - t0) / FRAC_PI_4).ceil().max(1.0) as usize;
                let h = (t1 - t0) / k as f64;
                for i in 0..k {
                    for (t, w) in gauss_on(m_arc, t0 + i as f64 * h, t0 + (i + 1) as f64 * h) {
                        push(t, w);
                    }
                }
            }
        }
    }
    out
}

/// `∫_D f = ∮ (∫₀¹ f(c + s(p − c)) s ds) (p − c) × dp`.
fn polar(boundary: &[([f64; 2], f64)], c: [f64; 2], degree: usize) -> QuadratureRule {
    let radial = gauss_on((degree + 2).div_ceil(2), 0.0, 1.0);
    let mut nodes = Vec::with_capacity(2 * boundary.len() * radial.len());
    let mut weights = Vec::with_capacity(boundary.len() * radial.len());
    for (p, om) in boundary {
        for &(s, w) in &radial {
            nodes.push(c[0] + s * (p[0] - c[0]));
            nodes.push(c[1] + s * (p[1] - c[1]));
            weights.push(om * s * w);
        }
    }
    QuadratureRule { dim: 2, nodes, weights, method: IntegrationMethod::ArcQuadrature }
}

/// Spin the upper half of a meridian section about `axis`: the section rule integrates
/// `ρ · f̄` exactly, `f̄` being the angular mean, and the trapezoid rule in the angle is
/// exact for the trigonometric polynomials that appear.
fn spin(section_boundary: &[([f64; 2], f64)], c: [f64; 2], degree: usize, axis: usize) -> QuadratureRule {
    let sec = polar(section_boundary, c, degree + 1);
    let k = degree + 1;
    let (i, j) = match axis {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let angles: Vec<(f64, f64)> = (0..k)
        .map(|a| {
            let phi = TAU * (a as f64 + 0.5) / k as f64;
            (phi.cos(), phi.sin())
        })
        .collect();
    let dphi = TAU / k as f64;
    let mut nodes = Vec::with_capacity(3 * sec.len() * k);
    let mut weights = Vec::with_capacity(sec.len() * k);
    for q in 0..sec.len() {
        let (z, rho) = (sec.nodes[2 * q], sec.nodes[2 * q + 1]);
        let w = sec.weights[q] * rho * dphi;
        for &(cs, sn) in &angles {
            let mut p = [0.0; 3];
            p[axis] = z;
            p[i] = rho * cs;
            p[j] = rho * sn;
            nodes.extend_from_slice(&p);
            weights.push(w);
        }
    }
    QuadratureRule { dim: 3, nodes, weights, method: IntegrationMethod::Revolution }
}

/// Boundary nodes of `{|x|^α + |y|^α ≤ s^α}` around the origin.
///
/// One eighth of the curve, from `(s, 0)` to the diagonal, is parametrised by `y`; the
/// curve is not smooth at the axis crossings, so the parameter interval is graded
/// geometrically towards that end. The other seven eighths follow by symmetry, which
/// leaves `ω` unchanged.
fn lp_boundary_nodes(alpha: f64, s: f64, degree: usize) -> Vec<([f64; 2], f64)> {
    const SIGMA: f64 = 0.15;
    const LEVELS: i32 = 15;
    let m_big = (degree + 16).div_ceil(2) + 4;
    let m_small = 20;
    let y_diag = 2f64.powf(-1.0 / alpha);
    let mut breaks = vec![0.0];
    for k in (1..=LEVELS).rev() {
        breaks.push(SIGMA.powi(k));
    }
    breaks.push(0.5);
    breaks.push(1.0);
    let mut eighth = Vec::new();
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        let m = if b - a >= 0.05 { m_big } else { m_small };
        for (tau, w) in gauss_on(m, a, b) {
            let yt = y_diag * tau;
            let ya = yt.powf(alpha);
            let x = s * (1.0 - ya).powf(1.0 / alpha);
            let y = s * yt;
            let dy = s * y_diag;
            let dx = -s * y_diag * yt.powf(alpha - 1.0) * (1.0 - ya).powf(1.0 / alpha - 1.0);
            eighth.push(([x, y], w * (x * dy - y * dx)));
        }
    }
    let mut out = Vec::with_capacity(8 * eighth.len());
    for swap in [false, true] {
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            for &(p, om) in &eighth {
                let q = if swap { [p[1], p[0]] } else { p };
                out.push(([sx * q[0], sy * q[1]], om));
            }
        }
    }
    out
}

/// Equal-weight rule from rejection samples in the bounding box.
fn monte_carlo_rule(body: &ConvexBody) -> Result<QuadratureRule> {
    let bbox = body.bounding_box();
    let d = body.dim();
    let vol: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let mut rng = ChaCha8Rng::seed_from_u64(MC_DEFAULT_SEED);
    let mut nodes = Vec::with_capacity(d * MC_RULE_POINTS);
    let mut tried = 0usize;
    let mut kept = 0usize;
    let mut p = vec![0.0; d];
    while kept < MC_RULE_POINTS {
        tried += 1;
        for (pi, (lo, hi)) in p.iter_mut().zip(&bbox) {
            *pi = lo + (hi - lo) * rng.random::<f64>();
        }
        if body.contains(&p) {
            nodes.extend_from_slice(&p);
            kept += 1;
        }
        if tried > 200 * MC_RULE_POINTS {
            return Err(Error::InvalidBody("body has negligible volume in its bounding box".into()));
        }
    }
    let w = vol * kept as f64 / tried as f64 / kept as f64;
    Ok(QuadratureRule { dim: d, nodes, weights: vec![w; kept], method: IntegrationMethod::MonteCarlo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{ball_moment, graded_indices};
    use std::f64::consts::PI;

    #[test]
    fn weights_are_positive() {
        for body in [
            ConvexBody::unit_ball(2),
            ConvexBody::square(-1.0, 2.0),
            ConvexBody::lp_ball(1.3, 2).unwrap(),
            ConvexBody::HalfBall3,
            ConvexBody::unit_ball(3),
        ] {
            let r = rule_for(&body, 12).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0), "{body:?}");
            assert!(body.contains(r.node(r.len() / 2)));
        }
    }

    #[test]
    fn disc_and_ball_moments() {
        let disc = rule_for(&ConvexBody::unit_ball(2), 20).unwrap();
        let ball = rule_for(&ConvexBody::unit_ball(3), 12).unwrap();
        for m in graded_indices(2, 20) {
            let v = disc.integrate(&|x| m.monomial(x));
            assert!((v - ball_moment(2, &m)).abs() < 1e-14, "{m:?}");
        }
        for m in graded_indices(3, 12) {
            let v = ball.integrate(&|x| m.monomial(x));
            assert!((v - ball_moment(3, &m)).abs() < 1e-14, "{m:?}");
        }
    }

    #[test]
    fn interval_rule() {
        let r = rule_for(&ConvexBody::interval(), 9).unwrap();
        assert_eq!(r.len(), 5);
        assert!((r.integrate(&|x| x[0].powi(8)) - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn halfball_volume() {
        let r = rule_for(&ConvexBody::HalfBall3, 6).unwrap();
        assert!((r.total_weight() - 2.0 * PI / 3.0).abs() < 1e-14);
        // ∫ x₃ over the half ball = π/4.
        assert!((r.integrate(&|x| x[2]) - PI / 4.0).abs() < 1e-14);
    }
}
