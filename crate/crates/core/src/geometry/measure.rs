use serde::{Deserialize, Serialize};

use super::ConvexBody;
use crate::linalg::{axpy, cross2, dot, fibonacci_sphere, frame, golden_min, norm, normalized};
use crate::{Error, Result};

const GRID_2D: usize = 4096;
const GRID_3D: usize = 8192;
const SECTION_RAYS: usize = 512;

/// Geometry at an interior point `x` in direction `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// Exit distance along `u`.
    pub delta: f64,
    pub dist_boundary: f64,
    /// `delta / dist_boundary`.
    pub nu: f64,
    /// `u` rotated by +90° (planar bodies only).
    pub v_dir: Option<Vec<f64>>,
    /// Exit distance along `-v_dir`.
    pub l1: Option<f64>,
    /// Exit distance along `+v_dir`.
    pub l2: Option<f64>,
    /// (d−1)-volume of the section through `x` orthogonal to `u`.
    pub section_volume: f64,
}

fn scale_of(body: &ConvexBody) -> f64 {
    body.circumradius_estimate().max(1e-300)
}

fn require_inside(body: &ConvexBody, x: &[f64]) -> Result<()> {
    if x.len() != body.dim() {
        return Err(Error::ParameterOutOfRange(format!(
            "point has dimension {}, body has {}",
            x.len(),
            body.dim()
        )));
    }
    if !body.contains(x) {
        return Err(Error::PointOutside);
    }
    Ok(())
}

/// Largest `t` with `x + t u ∈ D`, by bisection on membership bracketed by the support bound.
pub fn exit_distance(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<f64> {
    require_inside(body, x)?;
    let u = normalized(u);
    let scale = scale_of(body);
    let hi0 = body.support(&u) - dot(&u, x);
    if hi0 <= 1e-13 * scale {
        return Err(Error::XOnBoundary { distance: hi0.max(0.0) });
    }
    let (mut lo, mut hi) = (0.0, hi0);
    if body.contains(&axpy(x, hi, &u)) {
        return Ok(hi);
    }
    while hi - lo > 1e-12 * hi0 {
        let mid = 0.5 * (lo + hi);
        if body.contains(&axpy(x, mid, &u)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 1e-13 * scale {
        return Err(Error::XOnBoundary { distance: lo });
    }
    Ok(lo)
}

/// `dist(x, ∂D)` and an outward unit direction realising it.
pub fn boundary_distance(body: &ConvexBody, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    require_inside(body, x)?;
    let scale = scale_of(body);
    let (dist, u) = match body {
        ConvexBody::Polygon(p) => p
            .edges()
            .map(|(a, b)| {
                let e = [b[0] - a[0], b[1] - a[1]];
                let len = e[0].hypot(e[1]);
                let d = cross2(e, [x[0] - a[0], x[1] - a[1]]) / len;
                (d, vec![e[1] / len, -e[0] / len])
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap(),
        ConvexBody::Ball(b) => {
            let off: Vec<f64> = x.iter().zip(&b.center).map(|(p, c)| p - c).collect();
            let r = norm(&off);
            let u = if r > 0.0 {
                off.iter().map(|v| v / r).collect()
            } else {
                let mut e = vec![0.0; x.len()];
                e[0] = 1.0;
                e
            };
            (b.radius - r, u)
        }
        ConvexBody::HalfBall3 => {
            let r = norm(x);
            let to_sphere = 1.0 - r;
            if x[2] <= to_sphere {
                (x[2], vec![0.0, 0.0, -1.0])
            } else {
                (to_sphere, x.iter().map(|v| v / r).collect())
            }
        }
        _ => scan_boundary_distance(body, x),
    };
    if dist <= 1e-13 * scale {
        return Err(Error::XOnBoundary { distance: dist.max(0.0) });
    }
    Ok((dist, u))
}

fn scan_boundary_distance(body: &ConvexBody, x: &[f64]) -> (f64, Vec<f64>) {
    let gap = |u: &[f64]| body.support(u) - dot(u, x);
    match body.dim() {
        1 => {
            let (lo, hi) = body.bounding_box()[0];
            if hi - x[0] <= x[0] - lo {
                (hi - x[0], vec![1.0])
            } else {
                (x[0] - lo, vec![-1.0])
            }
        }
        2 => {
            let step = std::f64::consts::TAU / GRID_2D as f64;
            let at = |t: f64| gap(&[t.cos(), t.sin()]);
            let k = (0..GRID_2D)
                .min_by(|&i, &j| at(i as f64 * step).total_cmp(&at(j as f64 * step)))
                .unwrap();
            let t0 = k as f64 * step;
            let (t, g) = golden_min(at, t0 - step, t0 + step, 1e-10);
            let (t, g) = if g <= at(t0) { (t, g) } else { (t0, at(t0)) };
            (g, vec![t.cos(), t.sin()])
        }
        _ => {
            let dirs = fibonacci_sphere(GRID_3D);
            let best = dirs
                .iter()
                .min_by(|a, b| gap(&a[..]).total_cmp(&gap(&b[..])))
                .unwrap();
            refine_on_sphere(gap, best.to_vec(), 0.05, 1e-10)
        }
    }
}

/// Pattern search over unit vectors near `w`.
fn refine_on_sphere(f: impl Fn(&[f64]) -> f64, mut w: Vec<f64>, mut step: f64, tol: f64) -> (f64, Vec<f64>) {
    let mut fw = f(&w);
    while step > tol {
        let fr = frame(&w);
        let mut improved = false;
        for (a, b) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.7, 0.7), (-0.7, 0.7), (0.7, -0.7), (-0.7, -0.7)] {
            let cand: Vec<f64> = (0..3)
                .map(|i| w[i] + step * (a * fr[1][i] + b * fr[2][i]))
                .collect();
            let cand = normalized(&cand);
            let fc = f(&cand);
            if fc < fw {
                w = cand;
                fw = fc;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fw, w)
}

/// `(l1, l2)`: exit distances along `-v` and `+v`, `v` being `u` turned by +90°.
pub fn chord_lengths(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    if body.dim() != 2 {
        return Err(Error::ParameterOutOfRange("chord lengths need a planar body".into()));
    }
    let u = normalized(u);
    let v = [-u[1], u[0]];
    let l1 = exit_distance(body, x, &[-v[0], -v[1]])?;
    let l2 = exit_distance(body, x, &v)?;
    Ok((l1, l2))
}

/// Section through `x` orthogonal to `u` (3D), polygonised by rays from `x`.
///
/// Returns the in-plane basis and the polygon in those coordinates, centred at `x`.
pub fn section_polygon(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<([Vec<f64>; 2], Vec<[f64; 2]>)> {
    if body.dim() != 3 {
        return Err(Error::ParameterOutOfRange("section polygon needs a 3D body".into()));
    }
    let fr = frame(&normalized(u));
    let (e1, e2) = (fr[1].clone(), fr[2].clone());
    let mut pts = Vec::with_capacity(SECTION_RAYS);
    for k in 0..SECTION_RAYS {
        let t = std::f64::consts::TAU * k as f64 / SECTION_RAYS as f64;
        let (c, s) = (t.cos(), t.sin());
        let dir: Vec<f64> = (0..3).map(|i| c * e1[i] + s * e2[i]).collect();
        let l = exit_distance(body, x, &dir)?;
        pts.push([l * c, l * s]);
    }
    Ok(([e1, e2], pts))
}

/// (d−1)-volume of `{y ∈ D : (y − x) ⊥ u}`.
pub fn section_volume(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<f64> {
    match body.dim() {
        1 => Ok(1.0),
        2 => {
            let (l1, l2) = chord_lengths(body, x, u)?;
            Ok(l1 + l2)
        }
        _ => {
            let (_, pts) = section_polygon(body, x, u)?;
            let n = pts.len();
            Ok(0.5 * (0..n).map(|i| cross2(pts[i], pts[(i + 1) % n])).sum::<f64>())
        }
    }
}

/// All measurements at `x`; without `u` the boundary-distance minimiser is used.
pub fn measure(body: &ConvexBody, x: &[f64], u: Option<&[f64]>) -> Result<Measurement> {
    let (dist, ustar) = boundary_distance(body, x)?;
    let u = match u {
        Some(u) => {
            if norm(u) == 0.0 {
                return Err(Error::ParameterOutOfRange("zero direction".into()));
            }
            normalized(u)
        }
        None => ustar,
    };
    let delta = exit_distance(body, x, &u)?;
    let (v_dir, l1, l2) = if body.dim() == 2 {
        let (l1, l2) = chord_lengths(body, x, &u)?;
        (Some(vec![-u[1], u[0]]), Some(l1), Some(l2))
    } else {
        (None, None, None)
    };
    let section_volume = match (l1, l2) {
        (Some(a), Some(b)) => a + b,
        _ => section_volume(body, x, &u)?,
    };
    Ok(Measurement {
        x: x.to_vec(),
        u,
        delta,
        dist_boundary: dist,
        nu: delta / dist,
        v_dir,
        l1,
        l2,
        section_volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AffineMap;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exit_distance_examples() {
        let disc = ConvexBody::unit_ball(2);
        assert!(close(exit_distance(&disc, &[0.5, 0.0], &[1.0, 0.0]).unwrap(), 0.5, 1e-12));
        assert!(close(exit_distance(&disc, &[0.0, 0.0], &[0.6, -0.8]).unwrap(), 1.0, 1e-12));
        let lp = ConvexBody::lp_ball(1.7, 2).unwrap();
        let t = 0.013;
        assert!(close(exit_distance(&lp, &[1.0 - t, 0.0], &[1.0, 0.0]).unwrap(), t, 1e-11));
        assert!(matches!(
            exit_distance(&disc, &[1.0, 0.0], &[1.0, 0.0]),
            Err(Error::XOnBoundary { .. })
        ));
        assert!(matches!(exit_distance(&disc, &[1.0, 0.1], &[1.0, 0.0]), Err(Error::PointOutside)));
    }

    #[test]
    fn boundary_distance_examples() {
        let (d, u) = boundary_distance(&ConvexBody::unit_ball(2), &[0.3, 0.0]).unwrap();
        assert!(close(d, 0.7, 1e-14) && close(u[0], 1.0, 1e-14));
        let (d, u) = boundary_distance(&ConvexBody::square(-1.0, 1.0), &[0.9, 0.0]).unwrap();
        assert!(close(d, 0.1, 1e-14) && close(u[0], 1.0, 1e-14));
        let mu = 0.2;
        let (d, _) = boundary_distance(&ConvexBody::HalfBall3, &[1.0 - mu, 0.0, mu / 4.0]).unwrap();
        assert!(close(d, mu / 4.0, 1e-14));
    }

    #[test]
    fn scan_path_matches_closed_forms() {
        // An affine image forces the angular scan.
        let disc = ConvexBody::affine(AffineMap::identity(2), ConvexBody::unit_ball(2)).unwrap();
        let (d, u) = boundary_distance(&disc, &[0.3, 0.2]).unwrap();
        let r = 0.3f64.hypot(0.2);
        assert!(close(d, 1.0 - r, 1e-10));
        assert!((u[0] - 0.3 / r).abs() < 1e-5);
        let hb = ConvexBody::affine(AffineMap::identity(3), ConvexBody::HalfBall3).unwrap();
        let (d, _) = boundary_distance(&hb, &[0.8, 0.0, 0.05]).unwrap();
        assert!(close(d, 0.05, 1e-9), "{d}");
    }

    #[test]
    fn chord_examples() {
        let a = 0.6;
        let (l1, l2) = chord_lengths(&ConvexBody::unit_ball(2), &[0.0, a], &[0.0, 1.0]).unwrap();
        assert!(close(l1, 0.8, 1e-12) && close(l2, 0.8, 1e-12));
        let alpha = 1.5;
        let delta = 0.05;
        let lp = ConvexBody::lp_ball(alpha, 2).unwrap();
        let (l1, l2) = chord_lengths(&lp, &[1.0 - delta, 0.0], &[1.0, 0.0]).unwrap();
        let expect = (1.0 - (1.0f64 - delta).powf(alpha)).powf(1.0 / alpha);
        assert!(close(l1, expect, 1e-11) && close(l2, expect, 1e-11));
        let big = ConvexBody::ball(vec![0.0, 0.0], 2.0).unwrap();
        let (l1, _) = chord_lengths(&big, &[2.0 - delta, 0.0], &[1.0, 0.0]).unwrap();
        assert!(close(l1, (delta * (4.0 - delta)).sqrt(), 1e-11));
    }

    #[test]
    fn section_examples() {
        let a = 0.6;
        let s = section_volume(&ConvexBody::unit_ball(2), &[0.0, a], &[0.0, 1.0]).unwrap();
        assert!(close(s, 1.6, 1e-12));
        let delta = 0.1;
        let ball = ConvexBody::revolution(ConvexBody::unit_ball(2), 0).unwrap();
        let s = section_volume(&ball, &[1.0 - delta, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        let exact = std::f64::consts::PI * (1.0 - (1.0 - delta) * (1.0 - delta));
        assert!(close(s, exact, 1e-3));
        let mu: f64 = 0.1;
        let r17 = 17f64.sqrt();
        let u = [4.0 / r17, 0.0, -1.0 / r17];
        let s = section_volume(&ConvexBody::HalfBall3, &[1.0 - mu, 0.0, mu / 4.0], &u).unwrap();
        let box_area = 2.0 * (17.0 * mu / 8.0).sqrt() * (r17 * mu + r17 * mu / 16.0);
        assert!(s > 0.0 && s <= box_area, "{s} {box_area}");
    }

    #[test]
    fn measure_examples() {
        let m = measure(&ConvexBody::unit_ball(2), &[0.5, 0.0], None).unwrap();
        assert!(close(m.delta, 0.5, 1e-12) && close(m.nu, 1.0, 1e-10));
        assert!(close(m.l1.unwrap(), 0.75f64.sqrt(), 1e-12));
        let mu = 0.2;
        let r17 = 17f64.sqrt();
        let m = measure(
            &ConvexBody::HalfBall3,
            &[1.0 - mu, 0.0, mu / 4.0],
            Some(&[4.0 / r17, 0.0, -1.0 / r17]),
        )
        .unwrap();
        assert!(close(m.delta, r17 / 4.0 * mu, 1e-11), "{}", m.delta);
        assert!(close(m.nu, r17, 1e-10));
        let m = measure(&ConvexBody::square(-1.0, 1.0), &[0.0, 0.0], Some(&[1.0, 0.0])).unwrap();
        assert!(close(m.delta, 1.0, 1e-12) && close(m.l1.unwrap(), 1.0, 1e-12) && close(m.l2.unwrap(), 1.0, 1e-12));
    }
}
