//! Convex bodies and the measurements taken on them.

mod affine;
pub mod boundary;
mod gjk;
mod measure;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use affine::AffineMap;
pub use measure::{
    boundary_distance, chord_lengths, exit_distance, measure, section_polygon, section_volume,
    Measurement,
};

use crate::linalg::{cross2, dot, norm};
use crate::{Error, Result};
use boundary::{Atom, Boundary, Piece};

/// A convex body in one to three dimensions.
///
/// JSON form: `{"type": "polygon" | "ball" | "lpball" | "halfball3" | "revolution" |
/// "affine" | "hull", ...}` with the variant's fields alongside the tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConvexBody {
    Polygon(Polygon),
    Ball(Ball),
    #[serde(rename = "lpball")]
    LpBall(LpBall),
    /// `{x ∈ B³ : x₃ ≥ 0}`.
    #[serde(rename = "halfball3")]
    HalfBall3,
    Revolution(Revolution),
    #[serde(rename = "affine")]
    AffineImage(AffineImage),
    Hull(Hull),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// `{x : Σ |x_i / scale|^α ≤ 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpBall {
    pub alpha: f64,
    pub dim: usize,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Body of revolution about coordinate axis `axis` in R³.
///
/// `section` is the meridian section in `(axial, radial)` coordinates, i.e. the profile
/// reflected across the axis; it must be symmetric under `radial ↦ -radial`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Revolution {
    #[serde(default)]
    pub axis: usize,
    pub section: Box<ConvexBody>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineImage {
    pub map: AffineMap,
    pub base: Box<ConvexBody>,
}

/// Convex hull of bodies and isolated points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hull {
    #[serde(default)]
    pub parts: Vec<ConvexBody>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    boundary: OnceLock<Option<Arc<Boundary>>>,
}

impl Polygon {
    /// Strictly convex polygon; clockwise input is reversed.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Polygon> {
        if vertices.len() < 3 {
            return Err(Error::InvalidBody("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidBody("non-finite polygon vertex".into()));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let p = Polygon { vertices };
        p.validate()?;
        Ok(p)
    }

    /// Convex hull of a point cloud (collinear points dropped).
    pub fn hull_of(points: &[[f64; 2]]) -> Result<Polygon> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::InvalidBody("fewer than 3 distinct points".into()));
        }
        let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
            cross2([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]])
        };
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Polygon::new(lower)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        let scale = self
            .vertices
            .iter()
            .map(|v| v[0].abs().max(v[1].abs()))
            .fold(0.0, f64::max);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            if a == b {
                return Err(Error::InvalidBody("repeated polygon vertex".into()));
            }
            let turn = cross2([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]);
            if turn <= 1e-14 * scale * scale {
                return Err(Error::InvalidBody(
                    "polygon vertices are not in strictly convex counter-clockwise position".into(),
                ));
            }
        }
        // Winding number one: total turning is a single revolution.
        let mut total = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - b[0], c[1] - b[1]];
            total += cross2(e1, e2).atan2(dot(&e1, &e2));
        }
        if (total - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::InvalidBody("polygon winds more than once".into()));
        }
        Ok(())
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        self.edges()
            .all(|(a, b)| cross2([b[0] - a[0], b[1] - a[1]], [p[0] - a[0], p[1] - a[1]]) >= 0.0)
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross2(v[i], v[(i + 1) % n])).sum::<f64>()
}

impl Hull {
    pub fn new(parts: Vec<ConvexBody>, points: Vec<Vec<f64>>) -> Hull {
        Hull { parts, points, boundary: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.parts
            .first()
            .map(|p| p.dim())
            .or_else(|| self.points.first().map(|p| p.len()))
            .unwrap_or(0)
    }

    /// Explicit boundary when the hull is planar and built from points and ellipses.
    pub fn boundary(&self) -> Option<Arc<Boundary>> {
        self.boundary
            .get_or_init(|| {
                if self.dim() != 2 {
                    return None;
                }
                let atoms = hull_atoms(self)?;
                let pieces = boundary::hull_boundary(&atoms).ok()?;
                Boundary::new(pieces).ok().map(Arc::new)
            })
            .clone()
    }
}

fn hull_atoms(h: &Hull) -> Option<Vec<Atom>> {
    let mut atoms: Vec<Atom> = h.points.iter().map(|p| Atom::Point([p[0], p[1]])).collect();
    for part in &h.parts {
        atoms.extend(body_atoms(part)?);
    }
    Some(atoms)
}

/// Decomposition of a planar body into hull atoms, if it has one.
pub(crate) fn body_atoms(body: &ConvexBody) -> Option<Vec<Atom>> {
    match body {
        ConvexBody::Polygon(p) => Some(p.vertices.iter().map(|&v| Atom::Point(v)).collect()),
        ConvexBody::Ball(b) if b.center.len() == 2 => Some(vec![Atom::ellipse(
            [b.center[0], b.center[1]],
            [[b.radius, 0.0], [0.0, b.radius]],
        )]),
        ConvexBody::LpBall(l) if l.dim == 2 && l.alpha == 1.0 => Some(
            [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
                .iter()
                .map(|v| Atom::Point([v[0] * l.scale, v[1] * l.scale]))
                .collect(),
        ),
        ConvexBody::LpBall(l) if l.dim == 2 && l.alpha == 2.0 => {
            Some(vec![Atom::ellipse([0.0, 0.0], [[l.scale, 0.0], [0.0, l.scale]])])
        }
        ConvexBody::AffineImage(a) if a.map.dim() == 2 => {
            let m = a.map.matrix();
            let mm = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
            let off = [a.map.offset()[0], a.map.offset()[1]];
            Some(body_atoms(&a.base)?.iter().map(|at| at.mapped(&mm, off)).collect())
        }
        ConvexBody::Hull(h) if h.dim() == 2 => hull_atoms(h),
        _ => None,
    }
}

impl ConvexBody {
    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<ConvexBody> {
        Ok(ConvexBody::Polygon(Polygon::new(vertices)?))
    }

    /// `[lo, hi]²`.
    pub fn square(lo: f64, hi: f64) -> ConvexBody {
        ConvexBody::Polygon(Polygon::new(vec![[lo, lo], [hi, lo], [hi, hi], [lo, hi]]).unwrap())
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<ConvexBody> {
        let b = ConvexBody::Ball(Ball { center, radius });
        b.validate()?;
        Ok(b)
    }

    pub fn unit_ball(dim: usize) -> ConvexBody {
        ConvexBody::Ball(Ball { center: vec![0.0; dim], radius: 1.0 })
    }

    /// The segment `[-1, 1]`.
    pub fn interval() -> ConvexBody {
        Self::unit_ball(1)
    }

    pub fn lp_ball(alpha: f64, dim: usize) -> Result<ConvexBody> {
        let b = ConvexBody::LpBall(LpBall { alpha, dim, scale: 1.0 });
        b.validate()?;
        Ok(b)
    }

    pub fn half_ball3() -> ConvexBody {
        ConvexBody::HalfBall3
    }

    pub fn revolution(section: ConvexBody, axis: usize) -> Result<ConvexBody> {
        let b = ConvexBody::Revolution(Revolution { axis, section: Box::new(section) });
        b.validate()?;
        Ok(b)
    }

    pub fn affine(map: AffineMap, base: ConvexBody) -> Result<ConvexBody> {
        let b = ConvexBody::AffineImage(AffineImage { map, base: Box::new(base) });
        b.validate()?;
        Ok(b)
    }

    pub fn hull(parts: Vec<ConvexBody>, points: Vec<Vec<f64>>) -> Result<ConvexBody> {
        let b = ConvexBody::Hull(Hull::new(parts, points));
        b.validate()?;
        Ok(b)
    }

    pub fn from_json(text: &str) -> Result<ConvexBody> {
        let b: ConvexBody = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bodies serialise")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidBody(s.into()));
        match self {
            ConvexBody::Polygon(p) => p.validate(),
            ConvexBody::Ball(b) => {
                if !(b.radius > 0.0) || b.center.is_empty() || b.center.len() > 3 {
                    return bad("ball needs radius > 0 and dimension 1..=3");
                }
                Ok(())
            }
            ConvexBody::LpBall(l) => {
                if !(l.alpha >= 1.0) || !l.alpha.is_finite() || !(l.scale > 0.0) {
                    return bad("lp ball needs finite alpha >= 1 and scale > 0");
                }
                if !(1..=3).contains(&l.dim) {
                    return bad("lp ball dimension must be 1..=3");
                }
                Ok(())
            }
            ConvexBody::HalfBall3 => Ok(()),
            ConvexBody::Revolution(r) => {
                if r.axis > 2 {
                    return bad("revolution axis must be 0, 1 or 2");
                }
                if r.section.dim() != 2 {
                    return bad("revolution section must be planar");
                }
                r.section.validate()?;
                for k in 0..64 {
                    let t = std::f64::consts::TAU * (k as f64 + 0.37) / 64.0;
                    let (a, b) = (t.cos(), t.sin());
                    let h1 = r.section.support(&[a, b]);
                    let h2 = r.section.support(&[a, -b]);
                    if (h1 - h2).abs() > 1e-9 * (1.0 + h1.abs()) {
                        return bad("revolution section is not symmetric about the axis");
                    }
                }
                Ok(())
            }
            ConvexBody::AffineImage(a) => {
                if !a.map.is_invertible() || a.map.det() == 0.0 {
                    return bad("affine map is singular");
                }
                if a.map.dim() != a.base.dim() {
                    return bad("affine map dimension differs from its base");
                }
                a.base.validate()
            }
            ConvexBody::Hull(h) => {
                if h.parts.is_empty() && h.points.len() < 2 {
                    return bad("hull needs parts or several points");
                }
                let d = h.dim();
                if h.parts.iter().any(|p| p.dim() != d) || h.points.iter().any(|p| p.len() != d) {
                    return bad("hull members have mixed dimensions");
                }
                for p in &h.parts {
                    p.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Polygon(_) => 2,
            ConvexBody::Ball(b) => b.center.len(),
            ConvexBody::LpBall(l) => l.dim,
            ConvexBody::HalfBall3 | ConvexBody::Revolution(_) => 3,
            ConvexBody::AffineImage(a) => a.map.dim(),
            ConvexBody::Hull(h) => h.dim(),
        }
    }

    /// Closed-body membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            ConvexBody::Polygon(poly) => poly.contains([p[0], p[1]]),
            ConvexBody::Ball(b) => {
                let d2: f64 = p.iter().zip(&b.center).map(|(x, c)| (x - c) * (x - c)).sum();
                d2 <= b.radius * b.radius
            }
            ConvexBody::LpBall(l) => {
                if l.alpha == 1.0 {
                    p.iter().map(|x| x.abs()).sum::<f64>() <= l.scale
                } else {
                    p.iter().map(|x| (x.abs() / l.scale).powf(l.alpha)).sum::<f64>() <= 1.0
                }
            }
            ConvexBody::HalfBall3 => p[2] >= 0.0 && dot(p, p) <= 1.0,
            ConvexBody::Revolution(r) => r.section.contains(&r.to_section(p)),
            ConvexBody::AffineImage(a) => a.base.contains(&a.map.apply_inverse(p)),
            ConvexBody::Hull(h) => {
                if let Some(b) = h.boundary() {
                    return b.contains([p[0], p[1]]);
                }
                let scale = self.circumradius_estimate();
                gjk::contains(|u| self.support_point(u), p, 1e-12 * scale)
            }
        }
    }

    /// `h_D(u) = max_{y ∈ D} ⟨y, u⟩`, positively homogeneous in `u`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            ConvexBody::Polygon(poly) => poly
                .vertices
                .iter()
                .map(|v| v[0] * u[0] + v[1] * u[1])
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Ball(b) => dot(&b.center, u) + b.radius * norm(u),
            ConvexBody::LpBall(l) => l.scale * dual_norm(u, l.alpha),
            ConvexBody::HalfBall3 => {
                if u[2] >= 0.0 {
                    norm(u)
                } else {
                    u[0].hypot(u[1])
                }
            }
            ConvexBody::Revolution(r) => {
                let (ua, ur) = r.split(u);
                r.section.support(&[ua, norm(&ur)])
            }
            ConvexBody::AffineImage(a) => {
                a.base.support(&a.map.apply_transpose(u)) + dot(a.map.offset().as_slice(), u)
            }
            ConvexBody::Hull(h) => h
                .parts
                .iter()
                .map(|p| p.support(u))
                .chain(h.points.iter().map(|p| dot(p, u)))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// A maximiser of `⟨y, u⟩` over the body.
    pub fn support_point(&self, u: &[f64]) -> Vec<f64> {
        match self {
            ConvexBody::Polygon(poly) => {
                let v = poly
                    .vertices
                    .iter()
                    .max_by(|a, b| (a[0] * u[0] + a[1] * u[1]).total_cmp(&(b[0] * u[0] + b[1] * u[1])))
                    .unwrap();
                v.to_vec()
            }
            ConvexBody::Ball(b) => {
                let n = norm(u);
                if n == 0.0 {
                    return b.center.clone();
                }
                b.center.iter().zip(u).map(|(c, x)| c + b.radius * x / n).collect()
            }
            ConvexBody::LpBall(l) => lp_support_point(u, l.alpha)
                .into_iter()
                .map(|x| x * l.scale)
                .collect(),
            ConvexBody::HalfBall3 => {
                if u[2] >= 0.0 {
                    let n = norm(u);
                    if n == 0.0 {
                        return vec![0.0, 0.0, 0.5];
                    }
                    u.iter().map(|x| x / n).collect()
                } else {
                    let n = u[0].hypot(u[1]);
                    if n == 0.0 {
                        return vec![0.0, 0.0, 0.0];
                    }
                    vec![u[0] / n, u[1] / n, 0.0]
                }
            }
            ConvexBody::Revolution(r) => {
                let (ua, ur) = r.split(u);
                let rn = norm(&ur);
                let q = r.section.support_point(&[ua, rn]);
                let dir: Vec<f64> = if rn > 0.0 {
                    ur.iter().map(|x| x / rn).collect()
                } else {
                    vec![1.0, 0.0]
                };
                r.from_section(q[0], q[1], &dir)
            }
            ConvexBody::AffineImage(a) => {
                a.map.apply(&a.base.support_point(&a.map.apply_transpose(u)))
            }
            ConvexBody::Hull(h) => {
                let mut best = f64::NEG_INFINITY;
                let mut arg = Vec::new();
                for p in &h.parts {
                    let q = p.support_point(u);
                    let v = dot(&q, u);
                    if v > best {
                        best = v;
                        arg = q;
                    }
                }
                for q in &h.points {
                    let v = dot(q, u);
                    if v > best {
                        best = v;
                        arg = q.clone();
                    }
                }
                arg
            }
        }
    }

    /// A point in the interior, used to seed searches.
    pub fn interior_point(&self) -> Vec<f64> {
        match self {
            ConvexBody::Polygon(p) => {
                let n = p.vertices.len() as f64;
                let s = p.vertices.iter().fold([0.0, 0.0], |a, v| [a[0] + v[0], a[1] + v[1]]);
                vec![s[0] / n, s[1] / n]
            }
            ConvexBody::Ball(b) => b.center.clone(),
            ConvexBody::LpBall(l) => vec![0.0; l.dim],
            ConvexBody::HalfBall3 => vec![0.0, 0.0, 0.5],
            ConvexBody::Revolution(r) => {
                let q = r.section.interior_point();
                r.from_section(q[0], 0.0, &[1.0, 0.0])
            }
            ConvexBody::AffineImage(a) => a.map.apply(&a.base.interior_point()),
            ConvexBody::Hull(h) => {
                let d = h.dim();
                let mut s = vec![0.0; d];
                let pts: Vec<Vec<f64>> = h
                    .parts
                    .iter()
                    .map(|p| p.interior_point())
                    .chain(h.points.iter().cloned())
                    .collect();
                for p in &pts {
                    for i in 0..d {
                        s[i] += p[i];
                    }
                }
                s.iter().map(|x| x / pts.len() as f64).collect()
            }
        }
    }

    /// Axis-aligned bounding box from the support function.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                let hi = self.support(&e);
                e[i] = -1.0;
                (-self.support(&e), hi)
            })
            .collect()
    }

    /// Distance from the interior point to the farthest bounding-box corner.
    pub fn circumradius_estimate(&self) -> f64 {
        let c = self.interior_point();
        self.bounding_box()
            .iter()
            .zip(&c)
            .map(|((lo, hi), ci)| (hi - ci).abs().max((ci - lo).abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Counter-clockwise boundary pieces of a planar body, when it has an explicit
    /// piecewise description (l_α balls other than α ∈ {1, 2} do not).
    pub fn boundary_pieces(&self) -> Option<Vec<Piece>> {
        match self {
            ConvexBody::Polygon(p) => Some(p.edges().map(|(a, b)| Piece::Segment { a, b }).collect()),
            ConvexBody::Hull(h) => h.boundary().map(|b| b.pieces.clone()),
            _ if self.dim() == 2 => {
                let atoms = body_atoms(self)?;
                boundary::hull_boundary(&atoms).ok()
            }
            _ => None,
        }
    }
}

impl Revolution {
    fn radial_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [2, 0],
            _ => [0, 1],
        }
    }

    /// Axial component and the perpendicular part of `u`.
    fn split(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let [i, j] = self.radial_axes();
        (u[self.axis], vec![u[i], u[j]])
    }

    pub(crate) fn to_section(&self, p: &[f64]) -> [f64; 2] {
        let (a, r) = self.split(p);
        [a, norm(&r)]
    }

    /// Point with axial coordinate `z` at signed radius `rho` in radial direction `dir`.
    pub(crate) fn from_section(&self, z: f64, rho: f64, dir: &[f64]) -> Vec<f64> {
        let [i, j] = self.radial_axes();
        let mut p = vec![0.0; 3];
        p[self.axis] = z;
        p[i] = rho * dir[0];
        p[j] = rho * dir[1];
        p
    }
}

/// `‖u‖_β` with `1/α + 1/β = 1`.
fn dual_norm(u: &[f64], alpha: f64) -> f64 {
    if alpha == 1.0 {
        return u.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    let beta = alpha / (alpha - 1.0);
    let m = u.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * u.iter().map(|x| (x.abs() / m).powf(beta)).sum::<f64>().powf(1.0 / beta)
}

fn lp_support_point(u: &[f64], alpha: f64) -> Vec<f64> {
    let d = u.len();
    if alpha == 1.0 {
        let k = (0..d).max_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
        let mut y = vec![0.0; d];
        y[k] = if u[k] < 0.0 { -1.0 } else { 1.0 };
        return y;
    }
    let beta = alpha / (alpha - 1.0);
    let nb = dual_norm(u, alpha);
    if nb == 0.0 {
        return vec![0.0; d];
    }
    u.iter()
        .map(|x| x.signum() * (x.abs() / nb).powf(beta - 1.0))
        .collect()
}
