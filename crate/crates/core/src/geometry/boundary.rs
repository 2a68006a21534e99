//! Explicit boundaries of planar bodies: straight segments and elliptic arcs, plus the
//! support-function sweep that turns a hull of points and ellipses into such pieces.

use std::f64::consts::{PI, TAU};

use crate::linalg::{bisect_root, cross2};
use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn mat_t_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[1][0] * v[1], m[0][1] * v[0] + m[1][1] * v[1]]
}

fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Building block of a planar hull: an isolated point or a filled ellipse `c + M·B²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Atom {
    Point([f64; 2]),
    /// `det m > 0`, so increasing the parameter runs counter-clockwise.
    Ellipse { c: [f64; 2], m: Mat2 },
}

impl Atom {
    pub fn ellipse(c: [f64; 2], m: Mat2) -> Atom {
        if det2(&m) < 0.0 {
            // Reparametrise t -> -t.
            Atom::Ellipse { c, m: [[m[0][0], -m[0][1]], [m[1][0], -m[1][1]]] }
        } else {
            Atom::Ellipse { c, m }
        }
    }

    pub fn support(&self, u: [f64; 2]) -> f64 {
        match self {
            Atom::Point(p) => p[0] * u[0] + p[1] * u[1],
            Atom::Ellipse { c, m } => {
                let w = mat_t_vec(m, u);
                c[0] * u[0] + c[1] * u[1] + w[0].hypot(w[1])
            }
        }
    }

    /// Ellipse parameter of the support point in direction `u`.
    fn param(&self, u: [f64; 2]) -> f64 {
        match self {
            Atom::Point(_) => 0.0,
            Atom::Ellipse { m, .. } => {
                let w = mat_t_vec(m, u);
                w[1].atan2(w[0])
            }
        }
    }

    pub fn support_point(&self, u: [f64; 2]) -> [f64; 2] {
        match self {
            Atom::Point(p) => *p,
            Atom::Ellipse { c, m } => {
                let t = self.param(u);
                let q = mat_vec(m, [t.cos(), t.sin()]);
                [c[0] + q[0], c[1] + q[1]]
            }
        }
    }

    /// Image under `x ↦ A x + b`.
    pub fn mapped(&self, a: &Mat2, b: [f64; 2]) -> Atom {
        match self {
            Atom::Point(p) => {
                let q = mat_vec(a, *p);
                Atom::Point([q[0] + b[0], q[1] + b[1]])
            }
            Atom::Ellipse { c, m } => {
                let q = mat_vec(a, *c);
                let am = [
                    [a[0][0] * m[0][0] + a[0][1] * m[1][0], a[0][0] * m[0][1] + a[0][1] * m[1][1]],
                    [a[1][0] * m[0][0] + a[1][1] * m[1][0], a[1][0] * m[0][1] + a[1][1] * m[1][1]],
                ];
                Atom::ellipse([q[0] + b[0], q[1] + b[1]], am)
            }
        }
    }
}

/// One counter-clockwise piece of a planar boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Piece {
    Segment { a: [f64; 2], b: [f64; 2] },
    /// `c + m (cos t, sin t)` for `t ∈ [t0, t1]`, `t1 > t0`.
    Arc { c: [f64; 2], m: Mat2, t0: f64, t1: f64 },
}

impl Piece {
    pub fn start(&self) -> [f64; 2] {
        match self {
            Piece::Segment { a, .. } => *a,
            Piece::Arc { t0, .. } => self.point(*t0),
        }
    }

    pub fn end(&self) -> [f64; 2] {
        match self {
            Piece::Segment { b, .. } => *b,
            Piece::Arc { t1, .. } => self.point(*t1),
        }
    }

    /// Position at parameter `t` (segments use `t ∈ [0, 1]`).
    pub fn point(&self, t: f64) -> [f64; 2] {
        match self {
            Piece::Segment { a, b } => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
            Piece::Arc { c, m, .. } => {
                let q = mat_vec(m, [t.cos(), t.sin()]);
                [c[0] + q[0], c[1] + q[1]]
            }
        }
    }

    pub fn tangent(&self, t: f64) -> [f64; 2] {
        match self {
            Piece::Segment { a, b } => [b[0] - a[0], b[1] - a[1]],
            Piece::Arc { m, .. } => mat_vec(m, [-t.sin(), t.cos()]),
        }
    }

    /// Parameter interval.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Piece::Segment { .. } => (0.0, 1.0),
            Piece::Arc { t0, t1, .. } => (*t0, *t1),
        }
    }

    /// Distance `s` along the ray `o + s d` to the piece, taking the far crossing for arcs.
    fn ray_hit(&self, o: [f64; 2], d: [f64; 2]) -> Option<f64> {
        match self {
            Piece::Segment { a, b } => {
                let e = [b[0] - a[0], b[1] - a[1]];
                let den = cross2(d, e);
                if den.abs() < 1e-300 {
                    return None;
                }
                Some(cross2([a[0] - o[0], a[1] - o[1]], e) / den)
            }
            Piece::Arc { c, m, .. } => {
                let det = det2(m);
                let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
                let q0 = mat_vec(&inv, [o[0] - c[0], o[1] - c[1]]);
                let q1 = mat_vec(&inv, d);
                let qa = q1[0] * q1[0] + q1[1] * q1[1];
                let qb = 2.0 * (q0[0] * q1[0] + q0[1] * q1[1]);
                let qc = q0[0] * q0[0] + q0[1] * q0[1] - 1.0;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // Stable larger root.
                let s = if qb <= 0.0 { (-qb + sq) / (2.0 * qa) } else { 2.0 * qc / (-qb - sq) };
                Some(s)
            }
        }
    }

    /// Split so that no piece crosses the line `y = 0` in its interior.
    pub fn split_at_axis(&self) -> Vec<Piece> {
        match *self {
            Piece::Segment { a, b } => {
                if a[1] * b[1] < 0.0 {
                    let t = a[1] / (a[1] - b[1]);
                    let m = [a[0] + t * (b[0] - a[0]), 0.0];
                    vec![Piece::Segment { a, b: m }, Piece::Segment { a: m, b }]
                } else {
                    vec![*self]
                }
            }
            Piece::Arc { c, m, t0, t1 } => {
                // c_y + A cos t + B sin t = 0.
                let (a, b) = (m[1][0], m[1][1]);
                let amp = a.hypot(b);
                let mut cuts = Vec::new();
                if amp > 0.0 && (c[1] / amp).abs() < 1.0 {
                    let base = b.atan2(a);
                    let off = (-c[1] / amp).acos();
                    for root in [base + off, base - off] {
                        let mut t = root;
                        while t > t0 {
                            t -= TAU;
                        }
                        while t <= t0 {
                            t += TAU;
                        }
                        while t < t1 {
                            if t - t0 > 1e-14 && t1 - t > 1e-14 {
                                cuts.push(t);
                            }
                            t += TAU;
                        }
                    }
                }
                cuts.sort_by(f64::total_cmp);
                let mut out = Vec::new();
                let mut lo = t0;
                for t in cuts {
                    out.push(Piece::Arc { c, m, t0: lo, t1: t });
                    lo = t;
                }
                out.push(Piece::Arc { c, m, t0: lo, t1 });
                out
            }
        }
    }
}

/// Pieces of a closed convex boundary with an interior reference point for radial queries.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub pieces: Vec<Piece>,
    pub center: [f64; 2],
    angles: Vec<f64>,
    scale: f64,
}

impl Boundary {
    pub fn new(pieces: Vec<Piece>) -> Result<Boundary> {
        if pieces.is_empty() {
            return Err(Error::InvalidBody("empty boundary".into()));
        }
        // Average over sample points on the pieces is interior for a body with interior.
        let mut center = [0.0; 2];
        let mut count = 0.0;
        for p in &pieces {
            let (lo, hi) = p.range();
            for k in 0..4 {
                let q = p.point(lo + (hi - lo) * k as f64 / 4.0);
                center[0] += q[0];
                center[1] += q[1];
                count += 1.0;
            }
        }
        center = [center[0] / count, center[1] / count];
        let mut angles = Vec::with_capacity(pieces.len());
        let mut scale: f64 = 0.0;
        for p in &pieces {
            let s = p.start();
            scale = scale.max((s[0] - center[0]).hypot(s[1] - center[1]));
            let mut a = (s[1] - center[1]).atan2(s[0] - center[0]);
            if let Some(&prev) = angles.last() {
                while a < prev {
                    a += TAU;
                }
            }
            angles.push(a);
        }
        if scale <= 0.0 {
            return Err(Error::InvalidBody("boundary has no interior".into()));
        }
        Ok(Boundary { pieces, center, angles, scale })
    }

    /// Distance from the centre to the boundary along the direction of `p - center`,
    /// together with `|p - center|`.
    pub fn radial(&self, p: [f64; 2]) -> (f64, f64) {
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        if r == 0.0 {
            return (f64::INFINITY, 0.0);
        }
        let dir = [d[0] / r, d[1] / r];
        let a0 = self.angles[0];
        let mut a = dir[1].atan2(dir[0]);
        while a < a0 {
            a += TAU;
        }
        while a >= a0 + TAU {
            a -= TAU;
        }
        let k = self.angles.partition_point(|&x| x <= a).saturating_sub(1);
        let n = self.pieces.len();
        let mut best = f64::INFINITY;
        for off in [0, 1, n - 1] {
            let piece = &self.pieces[(k + off) % n];
            if let Some(s) = piece.ray_hit(self.center, dir) {
                if s > 0.0 && self.hit_on_piece(piece, self.center, dir, s) {
                    return (s, r);
                }
                if s > 0.0 {
                    best = best.min(s);
                }
            }
        }
        (best, r)
    }

    fn hit_on_piece(&self, piece: &Piece, o: [f64; 2], dir: [f64; 2], s: f64) -> bool {
        let q = [o[0] + s * dir[0], o[1] + s * dir[1]];
        let (sa, sb) = (piece.start(), piece.end());
        let c = self.center;
        let tol = 1e-12 * self.scale * self.scale;
        // q must lie angularly between start and end as seen from the centre.
        cross2([sa[0] - c[0], sa[1] - c[1]], [q[0] - c[0], q[1] - c[1]]) >= -tol
            && cross2([q[0] - c[0], q[1] - c[1]], [sb[0] - c[0], sb[1] - c[1]]) >= -tol
            || matches!(piece, Piece::Arc { t0, t1, .. } if t1 - t0 > PI)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (s, r) = self.radial(p);
        r <= s * (1.0 + 1e-13)
    }
}

const SWEEP: usize = 4096;

/// Boundary of the convex hull of the atoms, traversed counter-clockwise.
pub fn hull_boundary(atoms: &[Atom]) -> Result<Vec<Piece>> {
    if atoms.is_empty() {
        return Err(Error::InvalidBody("hull without parts".into()));
    }
    let dir = |t: f64| [t.cos(), t.sin()];
    let scale = atoms
        .iter()
        .map(|a| match a {
            Atom::Point(p) => p[0].hypot(p[1]),
            Atom::Ellipse { c, m } => c[0].hypot(c[1]) + m.iter().flatten().map(|x| x.abs()).sum::<f64>(),
        })
        .fold(0.0, f64::max)
        .max(1e-300);
    let argmax = |t: f64| {
        let u = dir(t);
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, a) in atoms.iter().enumerate() {
            let h = a.support(u);
            if h > val + 1e-14 * scale {
                val = h;
                best = i;
            }
        }
        best
    };
    let grid: Vec<f64> = (0..SWEEP).map(|k| TAU * k as f64 / SWEEP as f64).collect();
    let active: Vec<usize> = grid.iter().map(|&t| argmax(t)).collect();

    // (normal angle, atom before, atom after)
    let mut switches: Vec<(f64, usize, usize)> = Vec::new();
    for k in 0..SWEEP {
        let (a, b) = (active[k], active[(k + 1) % SWEEP]);
        if a != b {
            let lo = grid[k];
            let hi = lo + TAU / SWEEP as f64;
            resolve(atoms, a, b, lo, hi, scale, 0, &mut switches);
        }
    }

    if switches.is_empty() {
        return match atoms[active[0]] {
            Atom::Ellipse { c, m } => Ok(vec![Piece::Arc { c, m, t0: 0.0, t1: TAU }]),
            Atom::Point(_) => Err(Error::InvalidBody("hull of a single point".into())),
        };
    }
    switches.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut pieces = Vec::new();
    let count = switches.len();
    for i in 0..count {
        let (theta, from, to) = switches[i];
        let u = dir(theta);
        let p = atoms[from].support_point(u);
        let q = atoms[to].support_point(u);
        if (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-13 * scale {
            pieces.push(Piece::Segment { a: p, b: q });
        }
        let (next_theta, _, _) = switches[(i + 1) % count];
        let next_theta = if i + 1 == count { next_theta + TAU } else { next_theta };
        if let Atom::Ellipse { c, m } = atoms[to] {
            let t0 = atoms[to].param(u);
            let mut t1 = atoms[to].param(dir(next_theta));
            while t1 < t0 {
                t1 += TAU;
            }
            if t1 - t0 > 1e-13 {
                pieces.push(Piece::Arc { c, m, t0, t1 });
            }
        }
    }
    Ok(pieces)
}

#[allow(clippy::too_many_arguments)]
fn resolve(
    atoms: &[Atom],
    a: usize,
    b: usize,
    lo: f64,
    hi: f64,
    scale: f64,
    depth: usize,
    out: &mut Vec<(f64, usize, usize)>,
) {
    let diff = |t: f64| {
        let u = [t.cos(), t.sin()];
        atoms[a].support(u) - atoms[b].support(u)
    };
    let theta = bisect_root(diff, lo, hi, 1e-15);
    if depth < 24 {
        let u = [theta.cos(), theta.sin()];
        let ha = atoms[a].support(u).max(atoms[b].support(u));
        let (c, hc) = atoms
            .iter()
            .enumerate()
            .map(|(i, at)| (i, at.support(u)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if c != a && c != b && hc > ha + 1e-13 * scale {
            resolve(atoms, a, c, lo, theta, scale, depth + 1, out);
            resolve(atoms, c, b, theta, hi, scale, depth + 1, out);
            return;
        }
    }
    let theta = theta.rem_euclid(TAU);
    out.push((theta, a, b));
}
