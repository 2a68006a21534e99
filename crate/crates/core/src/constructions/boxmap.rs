use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_distance, exit_distance, section_polygon, AffineMap, ConvexBody, Measurement};
use crate::linalg::{cross2, cross3, direction_grid, dot, frame, golden_min, norm, normalized, sub};
use crate::{Error, Result};

/// Sampled boundary points used for the containment check.
pub const CONTAINMENT_SAMPLES: usize = 4096;
/// Allowed excess of `|T⁻¹(p)_i|` over 1 for boundary samples `p`.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMapKind {
    Interval,
    Halfspace,
    Parallelogram,
    Corner,
}

/// Affine `T` with `D ⊂ T([-1,1]^d)`, and `y = T⁻¹(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxMap {
    pub map: AffineMap,
    pub y: Vec<f64>,
    pub slacks: Vec<f64>,
    pub kind: BoxMapKind,
    /// Sine of the angle between the two lines through the exit point (parallelogram only).
    pub sin_phi: Option<f64>,
    /// Largest `|T⁻¹(p)_i| − 1` over sampled boundary points.
    pub containment_excess: f64,
}

impl BoxMap {
    pub fn det(&self) -> f64 {
        self.map.det()
    }

    /// Assemble from `T⁻¹`, check `T(y) = x` and sampled containment.
    fn finish(body: &ConvexBody, inv: AffineMap, x: &[f64], kind: BoxMapKind) -> Result<BoxMap> {
        let map = inv
            .inverse()
            .ok_or_else(|| Error::SectionDegenerate("box map is singular".into()))?;
        let y = inv.apply(x);
        let back = map.apply(&y);
        let err = norm(&sub(&back, x));
        if err > 1e-10 * (1.0 + norm(x)) {
            return Err(Error::RoundTripFailed(format!("T(y) misses x by {err:e}")));
        }
        let excess = containment_excess(body, &inv);
        if excess > CONTAINMENT_TOL {
            return Err(Error::ContainmentFailed { worst: excess });
        }
        let slacks = y.iter().map(|v| 1.0 - v.abs()).collect();
        Ok(BoxMap { map, y, slacks, kind, sin_phi: None, containment_excess: excess })
    }
}

fn containment_excess(body: &ConvexBody, inv: &AffineMap) -> f64 {
    direction_grid(body.dim(), CONTAINMENT_SAMPLES, CONTAINMENT_SAMPLES)
        .iter()
        .map(|u| {
            let z = inv.apply(&body.support_point(u));
            z.iter().map(|v| v.abs() - 1.0).fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `T⁻¹` sending the slab `-h(-n_i) ≤ n_i·p ≤ c_i` onto `-1 ≤ z_i ≤ 1`.
fn slab_inverse(normals: &[Vec<f64>], upper: &[f64], lower: &[f64]) -> AffineMap {
    let d = normals.len();
    let mut m = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for i in 0..d {
        let w = upper[i] + lower[i];
        for j in 0..d {
            m[(i, j)] = 2.0 * normals[i][j] / w;
        }
        b[i] = (lower[i] - upper[i]) / w;
    }
    AffineMap::new(m, b)
}

/// Map in the normalised position `D ⊂ R·B^d`, `x = (a, 0, …, 0)`, supporting hyperplane with
/// unit normal `w` through `(a + δ, 0, …, 0)`.
pub fn halfspace_box_map(r: f64, d: usize, a: f64, delta: f64, w: &[f64]) -> Result<BoxMap> {
    if !(w[0] > 0.0) {
        return Err(Error::InvalidNormal(w[0]));
    }
    if !(delta > 0.0) || !(r > 0.0) {
        return Err(Error::ParameterOutOfRange("need delta > 0 and R > 0".into()));
    }
    let k = r * d as f64 / w[0];
    let mut m = DMatrix::zeros(d, d);
    let mut off = DVector::zeros(d);
    m[(0, 0)] = (a + delta + k) / 2.0;
    off[0] = (a + delta - k) / 2.0;
    for j in 1..d {
        m[(0, j)] = -r * w[j] / w[0];
        m[(j, j)] = r;
    }
    let map = AffineMap::new(m, off);
    let mut x = vec![0.0; d];
    x[0] = a;
    let y = map.apply_inverse(&x);
    let slacks = y.iter().map(|v| 1.0 - v.abs()).collect();
    Ok(BoxMap { map, y, slacks, kind: BoxMapKind::Halfspace, sin_phi: None, containment_excess: f64::NAN })
}

/// Supporting normal `w` (with `w·u > 0`) minimising the offset `(h(w) − w·x) / (w·u)` of its
/// hyperplane along `u`. Returns `(w, offset)`; the offset equals the exit distance exactly
/// when `w` is normal to `D` at the exit point.
fn supporting_normal(body: &ConvexBody, x: &[f64], u: &[f64], delta: f64) -> (Vec<f64>, f64) {
    let offset = |w: &[f64]| (body.support(w) - dot(w, x)) / dot(w, u);
    let base = offset(u);
    if base <= delta * (1.0 + 1e-9) {
        return (u.to_vec(), base);
    }
    let fr = frame(u);
    let dir = |th: f64, ph: f64| -> Vec<f64> {
        let (c, s) = (th.cos(), th.sin());
        match u.len() {
            2 => (0..2).map(|i| c * fr[0][i] + s * fr[1][i]).collect(),
            _ => (0..3).map(|i| c * fr[0][i] + s * (ph.cos() * fr[1][i] + ph.sin() * fr[2][i])).collect(),
        }
    };
    let lim = std::f64::consts::FRAC_PI_2 * 0.999;
    if u.len() == 2 {
        let grid = 2048;
        let (mut bt, mut bv) = (0.0, base);
        for k in 0..=grid {
            let th = -lim + 2.0 * lim * k as f64 / grid as f64;
            let v = offset(&dir(th, 0.0));
            if v < bv {
                bv = v;
                bt = th;
            }
        }
        let h = 2.0 * lim / grid as f64;
        let (t, v) = golden_min(|t| offset(&dir(t, 0.0)), (bt - h).max(-lim), (bt + h).min(lim), 1e-14);
        return if v < bv { (dir(t, 0.0), v) } else { (dir(bt, 0.0), bv) };
    }
    let (mut bt, mut bp, mut bv) = (0.0, 0.0, base);
    for i in 1..=64 {
        let th = lim * i as f64 / 64.0;
        for j in 0..128 {
            let ph = std::f64::consts::TAU * j as f64 / 128.0;
            let v = offset(&dir(th, ph));
            if v < bv {
                (bt, bp, bv) = (th, ph, v);
            }
        }
    }
    let mut step = lim / 64.0;
    while step > 1e-12 {
        let mut moved = false;
        for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let th = (bt + dt).clamp(0.0, lim);
            let v = offset(&dir(th, bp + dp));
            if v < bv {
                (bt, bp, bv) = (th, bp + dp, v);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (dir(bt, bp), bv)
}

/// Halfspace construction for a body in general position: frame with first axis `u`,
/// centre on the line through `x` nearest the bounding-box centre, radius from the box
/// corners.
pub fn halfspace_box_map_for(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<BoxMap> {
    let d = body.dim();
    let u = normalized(u);
    let delta = exit_distance(body, x, &u)?;
    let bbox = body.bounding_box();
    let centre: Vec<f64> = bbox.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let a = -dot(&sub(&centre, x), &u);
    let o: Vec<f64> = (0..d).map(|i| x[i] - a * u[i]).collect();
    let mut r: f64 = 0.0;
    for mask in 0..(1usize << d) {
        let corner: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { bbox[i].1 } else { bbox[i].0 }).collect();
        r = r.max(norm(&sub(&corner, &o)));
    }
    let (w, offset) = supporting_normal(body, x, &u, delta);
    let fr = frame(&u);
    let wc: Vec<f64> = fr.iter().map(|e| dot(e, &w)).collect();
    let canon = halfspace_box_map(r, d, a, offset, &wc)?;
    // F(t) = O + Σ t_j e_j
    let f = AffineMap::new(DMatrix::from_fn(d, d, |i, j| fr[j][i]), DVector::from_vec(o));
    let map = f.compose(&canon.map);
    let inv = map.inverse().ok_or_else(|| Error::SectionDegenerate("singular halfspace map".into()))?;
    BoxMap::finish(body, inv, x, BoxMapKind::Halfspace)
}

/// The point `x + t₀u`, `t₀ ≤ 0`, behind `x` with the largest distance
/// `r` to the boundary. Returns `(t₀, r)`.
pub fn inner_ball_behind(body: &ConvexBody, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    let back: Vec<f64> = u.iter().map(|v| -v).collect();
    let reach = exit_distance(body, x, &back)?;
    let dist = |t: f64| {
        let p: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + t * b).collect();
        boundary_distance(body, &p).map(|r| r.0).unwrap_or(0.0)
    };
    let (t, negr) = golden_min(|t| -dist(t), -reach, 0.0, 1e-9 * (1.0 + reach));
    Ok((t, -negr))
}

/// Planar construction around a point whose chords `l₁, l₂` are shorter than the inscribed
/// radius `r`; otherwise falls back to [`halfspace_box_map_for`].
pub fn parallelogram_2d(body: &ConvexBody, meas: &Measurement) -> Result<BoxMap> {
    if body.dim() != 2 {
        return Err(Error::ParameterOutOfRange("parallelogram map needs a planar body".into()));
    }
    let (x, u) = (&meas.x, &meas.u);
    let (l1, l2, delta) = (meas.l1.unwrap_or(0.0), meas.l2.unwrap_or(0.0), meas.delta);
    let (t0, r) = inner_ball_behind(body, x, u)?;
    let r = r * (1.0 - 1e-9);
    if l1 >= r || l2 >= r {
        return halfspace_box_map_for(body, x, u);
    }
    let sin_phi = ((delta / l1).atan() + (delta / l2).atan()).sin();
    if sin_phi < 1e-12 {
        return Err(Error::DegenerateAngle(sin_phi));
    }
    let a = -t0;
    let v = [-u[1], u[0]];
    // Local coordinates (ξ, η) along (v, u) with origin O = x + t₀u.
    let o = [x[0] + t0 * u[0], x[1] + t0 * u[1]];
    let to_world = |n: [f64; 2]| [n[0] * v[0] + n[1] * u[0], n[0] * v[1] + n[1] * u[1]];
    let top = [0.0, a + delta];
    let foot = [[-l1, a], [l2, a]];
    let inner = [[-r, 0.0], [r, 0.0]];
    let q_dir = [sub2(top, foot[0]), sub2(top, foot[1])];
    let r_dir = [sub2(foot[0], inner[0]), sub2(foot[1], inner[1])];
    let mut normals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for i in 0..2 {
        let p = intersect(inner[i], r_dir[i], foot[1 - i], q_dir[1 - i]).ok_or(Error::DegenerateAngle(sin_phi))?;
        let dq = q_dir[i];
        let mut n = [-dq[1], dq[0]];
        let len = n[0].hypot(n[1]);
        n = [n[0] / len, n[1] / len];
        if n[0] * p[0] + n[1] * p[1] < 0.0 {
            n = [-n[0], -n[1]];
        }
        let nw = to_world(n);
        let c = nw[0] * (o[0] + p[0] * v[0] + p[1] * u[0]) + nw[1] * (o[1] + p[0] * v[1] + p[1] * u[1]);
        if body.support(&nw) > c + 1e-12 * (1.0 + c.abs()) {
            return Err(Error::ContainmentFailed { worst: body.support(&nw) - c });
        }
        lower.push(body.support(&[-nw[0], -nw[1]]));
        upper.push(c);
        normals.push(nw.to_vec());
    }
    let inv = slab_inverse(&normals, &upper, &lower);
    let mut bm = BoxMap::finish(body, inv, x, BoxMapKind::Parallelogram)?;
    bm.sin_phi = Some(sin_phi);
    Ok(bm)
}

fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn intersect(p: [f64; 2], dp: [f64; 2], q: [f64; 2], dq: [f64; 2]) -> Option<[f64; 2]> {
    let den = cross2(dp, dq);
    if den.abs() < 1e-300 {
        return None;
    }
    let t = cross2(sub2(q, p), dq) / den;
    Some([p[0] + t * dp[0], p[1] + t * dp[1]])
}

/// Vertex indices and area of a largest triangle with vertices among those of a convex polygon.
pub fn max_area_triangle(poly: &[[f64; 2]]) -> ([usize; 3], f64) {
    let n = poly.len();
    let mut best = ([0, 1.min(n - 1), 2.min(n - 1)], 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let e = sub2(poly[j], poly[i]);
            for k in j + 1..n {
                let area = 0.5 * cross2(e, sub2(poly[k], poly[i])).abs();
                if area > best.1 {
                    best = ([i, j, k], area);
                }
            }
        }
    }
    best
}

/// Corner construction in three dimensions: a largest triangle `S` of the section through
/// `x` orthogonal to `u`, its centroid homotheties `S₁ = −2(S − z) + z` and `S₂ = 4(S₁ − z) + z`,
/// and the cone with apex `x + 2δu` over `S₂ + δu`.
pub fn corner_map_3d(body: &ConvexBody, meas: &Measurement) -> Result<BoxMap> {
    if body.dim() != 3 {
        return Err(Error::ParameterOutOfRange("corner map needs a 3D body".into()));
    }
    let (x, u, delta) = (&meas.x, &meas.u, meas.delta);
    let ([e1, e2], poly) = section_polygon(body, x, u)?;
    let ([i, j, k], area) = max_area_triangle(&poly);
    let scale = body.circumradius_estimate();
    if area <= 1e-12 * scale * scale {
        return Err(Error::SectionDegenerate(format!("largest inscribed triangle has area {area:e}")));
    }
    let s = [poly[i], poly[j], poly[k]];
    let z = [(s[0][0] + s[1][0] + s[2][0]) / 3.0, (s[0][1] + s[1][1] + s[2][1]) / 3.0];
    let lift = |p: [f64; 2]| -> [f64; 3] {
        let q = [-8.0 * (p[0] - z[0]) + z[0], -8.0 * (p[1] - z[1]) + z[1]];
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = x[a] + delta * u[a] + q[0] * e1[a] + q[1] * e2[a];
        }
        out
    };
    let s2 = [lift(s[0]), lift(s[1]), lift(s[2])];
    let apex = [x[0] + 2.0 * delta * u[0], x[1] + 2.0 * delta * u[1], x[2] + 2.0 * delta * u[2]];
    let mut normals = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for f in 0..3 {
        let (p, q) = (s2[(f + 1) % 3], s2[(f + 2) % 3]);
        let a = [p[0] - apex[0], p[1] - apex[1], p[2] - apex[2]];
        let b = [q[0] - apex[0], q[1] - apex[1], q[2] - apex[2]];
        let mut n = normalized(&cross3(a, b));
        let c = dot(&n, &apex);
        if dot(&n, x) > c {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        let c = dot(&n, &apex);
        let h = body.support(&n);
        if h > c + 1e-9 * scale {
            return Err(Error::ContainmentFailed { worst: h - c });
        }
        let minus: Vec<f64> = n.iter().map(|v| -v).collect();
        lower.push(body.support(&minus));
        upper.push(c);
        normals.push(n);
    }
    let inv = slab_inverse(&normals, &upper, &lower);
    BoxMap::finish(body, inv, x, BoxMapKind::Corner)
}

/// Dispatch on dimension: interval, parallelogram (or halfspace) in the plane, corner in space.
pub fn box_map(body: &ConvexBody, meas: &Measurement) -> Result<BoxMap> {
    match body.dim() {
        1 => {
            let (lo, hi) = body.bounding_box()[0];
            let inv = AffineMap::from_rows(&[&[2.0 / (hi - lo)]], &[-(hi + lo) / (hi - lo)]);
            BoxMap::finish(body, inv, &meas.x, BoxMapKind::Interval)
        }
        2 => parallelogram_2d(body, meas),
        3 => corner_map_3d(body, meas),
        d => Err(Error::Unsupported(format!("box maps in dimension {d}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::measure;

    #[test]
    fn canonical_halfspace_slack() {
        let bm = halfspace_box_map(1.0, 2, 0.4, 0.1, &[1.0, 0.0]).unwrap();
        // 1 − y₁ = 2δ / (a + δ + Rd/w₁) exactly, below the simplified 2w₁δ/(Rd).
        assert!((bm.slacks[0] - 0.2 / 2.5).abs() < 1e-15);
        assert!(bm.slacks[0] <= 2.0 * 0.1 / 2.0);
        assert!(bm.y[1].abs() < 1e-15);
        let disc = ConvexBody::unit_ball(2);
        let bm = halfspace_box_map(1.0, 2, 0.5, 0.5, &[1.0, 0.0]).unwrap();
        let inv = bm.map.inverse().unwrap();
        assert!(containment_excess(&disc, &inv) <= CONTAINMENT_TOL);
        assert!(matches!(halfspace_box_map(1.0, 2, 0.4, 0.1, &[0.0, 1.0]), Err(Error::InvalidNormal(_))));
    }

    #[test]
    fn general_halfspace_on_disc() {
        let disc = ConvexBody::unit_ball(2);
        let bm = halfspace_box_map_for(&disc, &[0.5, 0.0], &[1.0, 0.0]).unwrap();
        assert!(bm.containment_excess <= CONTAINMENT_TOL);
        assert!((bm.map.apply(&bm.y)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn halfspace_with_tilted_normal() {
        // Exit through a vertex of the square along a direction that is not normal there.
        let sq = ConvexBody::square(-1.0, 1.0);
        let u = normalized(&[1.0, 0.5]);
        let x = [0.5, 0.75];
        let bm = halfspace_box_map_for(&sq, &x, &u).unwrap();
        assert!(bm.y.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn triangles() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((max_area_triangle(&sq).1 - 0.5).abs() < 1e-15);
        let tri = [[0.0, 0.0], [3.0, 0.0], [1.0, 2.0]];
        assert_eq!(max_area_triangle(&tri).0, [0, 1, 2]);
        let hex: Vec<[f64; 2]> = (0..6)
            .map(|k| {
                let t = std::f64::consts::PI / 3.0 * k as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!((max_area_triangle(&hex).1 - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn parallelogram_on_disc_symmetric() {
        let disc = ConvexBody::unit_ball(2);
        for a in [0.9, 0.97, 0.995] {
            let m = measure(&disc, &[0.0, a], Some(&[0.0, 1.0])).unwrap();
            let bm = parallelogram_2d(&disc, &m).unwrap();
            assert_eq!(bm.kind, BoxMapKind::Parallelogram);
            let delta = 1.0 - a;
            let l = (1.0 - a * a).sqrt();
            let phi = 2.0 * (delta / l).atan();
            assert!((bm.sin_phi.unwrap() - phi.sin()).abs() < 1e-9);
            assert!(bm.y.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn corner_on_half_ball() {
        let hb = ConvexBody::HalfBall3;
        let mu = 0.1;
        let x = [1.0 - mu, 0.0, mu / 4.0];
        let u = normalized(&[4.0, 0.0, -1.0]);
        let m = measure(&hb, &x, Some(&u)).unwrap();
        let bm = corner_map_3d(&hb, &m).unwrap();
        assert!(bm.containment_excess <= CONTAINMENT_TOL);
        for s in &bm.slacks {
            assert!(*s >= 0.0);
        }
    }
}
