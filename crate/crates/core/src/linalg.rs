//! Small dense helpers for points in one to three dimensions.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + t * b`
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Counter-clockwise rotation by a right angle.
pub fn rot90(u: [f64; 2]) -> [f64; 2] {
    [-u[1], u[0]]
}

/// Orthonormal basis whose first vector is the unit vector `u`.
pub fn frame(u: &[f64]) -> Vec<Vec<f64>> {
    match u.len() {
        1 => vec![vec![u[0].signum()]],
        2 => vec![u.to_vec(), vec![-u[1], u[0]]],
        3 => {
            let uu = [u[0], u[1], u[2]];
            // Cross with the coordinate axis least aligned with u.
            let k = (0..3)
                .min_by(|&i, &j| uu[i].abs().total_cmp(&uu[j].abs()))
                .unwrap();
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let a = cross3(uu, e);
            let an = norm(&a);
            let a = [a[0] / an, a[1] / an, a[2] / an];
            let b = cross3(uu, a);
            vec![uu.to_vec(), a.to_vec(), b.to_vec()]
        }
        d => panic!("frame: unsupported dimension {d}"),
    }
}

/// Fibonacci lattice of `count` nearly uniform unit vectors on the sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Unit directions used for angular scans: a circle grid in 2D, a Fibonacci sphere in 3D.
pub fn direction_grid(dim: usize, count2: usize, count3: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count2)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / count2 as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => fibonacci_sphere(count3).iter().map(|p| p.to_vec()).collect(),
    }
}

/// Minimise a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Root of `f` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in sign.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for u in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.48, -0.6, 0.64]] {
            let f = frame(&u);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(&f[i], &f[j]) - expect).abs() < 1e-14);
                }
            }
            assert_eq!(f[0], u.to_vec());
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(26, 2), 325);
        assert_eq!(binomial(17, 3), 680);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (t, v) = golden_min(|t| (t - 0.3) * (t - 0.3) + 2.0, -1.0, 1.0, 1e-12);
        assert!((t - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }
}
