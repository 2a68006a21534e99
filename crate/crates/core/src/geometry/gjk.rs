//! Distance from a point to a convex set known only through its support points.

use crate::linalg::{dot, sub};

/// Closest point of the convex hull of `simplex` to `p`; keeps only the vertices it uses.
fn reduce(simplex: &mut Vec<Vec<f64>>, p: &[f64]) -> Vec<f64> {
    let k = simplex.len();
    let mut best: Option<(f64, u32, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s0 = &simplex[idx[0]];
        let m = idx.len() - 1;
        let dirs: Vec<Vec<f64>> = idx[1..].iter().map(|&i| sub(&simplex[i], s0)).collect();
        let rhs: Vec<f64> = dirs.iter().map(|e| dot(e, &sub(p, s0))).collect();
        let mut gram = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                gram[i][j] = dot(&dirs[i], &dirs[j]);
            }
        }
        let Some(mu) = solve_small(gram, rhs) else { continue };
        let lam0 = 1.0 - mu.iter().sum::<f64>();
        if lam0 < -1e-12 || mu.iter().any(|&x| x < -1e-12) {
            continue;
        }
        let mut y = s0.clone();
        for (e, &c) in dirs.iter().zip(&mu) {
            for (yi, ei) in y.iter_mut().zip(e) {
                *yi += c * ei;
            }
        }
        let d = sub(p, &y);
        let dist = dot(&d, &d);
        if best.as_ref().is_none_or(|b| dist < b.0) {
            best = Some((dist, mask, y));
        }
    }
    let (_, mask, y) = best.expect("a single vertex is always feasible");
    let kept: Vec<Vec<f64>> = (0..k)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| simplex[i].clone())
        .collect();
    *simplex = kept;
    y
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Whether `p` lies in the convex set with support-point oracle `support_point`,
/// decided to absolute tolerance `tol`.
pub fn contains(support_point: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], tol: f64) -> bool {
    let d = p.len();
    let mut first = vec![0.0; d];
    first[0] = 1.0;
    let mut simplex = vec![support_point(&first)];
    let mut y = simplex[0].clone();
    for _ in 0..1000 {
        let w = sub(p, &y);
        let wn = dot(&w, &w).sqrt();
        if wn <= tol {
            return true;
        }
        let s = support_point(&w);
        // Separating plane with margin: definitely outside.
        if dot(&w, &sub(p, &s)) > tol * wn {
            return false;
        }
        // No progress possible: y is (numerically) the closest point.
        if dot(&w, &sub(&s, &y)) <= 1e-15 * wn * wn.max(tol) {
            return wn <= tol;
        }
        if simplex.iter().any(|q| sub(q, &s).iter().all(|x| x.abs() < 1e-300)) {
            return wn <= tol;
        }
        simplex.push(s);
        y = reduce(&mut simplex, p);
    }
    dot(&sub(p, &y), &sub(p, &y)).sqrt() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_support(u: &[f64]) -> Vec<f64> {
        vec![u[0].signum(), u[1].signum()]
    }

    fn ball_support(u: &[f64]) -> Vec<f64> {
        let n = dot(u, u).sqrt();
        u.iter().map(|x| x / n).collect()
    }

    #[test]
    fn square_membership() {
        assert!(contains(square_support, &[0.3, -0.9], 1e-12));
        assert!(contains(square_support, &[1.0, 1.0], 1e-12));
        assert!(!contains(square_support, &[1.0 + 1e-9, 0.0], 1e-12));
    }

    #[test]
    fn ball_membership_near_boundary() {
        let r = 1.0 - 1e-9;
        assert!(contains(ball_support, &[r * 0.6, r * 0.8, 0.0], 1e-12));
        let r = 1.0 + 1e-9;
        assert!(!contains(ball_support, &[0.0, r * 0.6, r * 0.8], 1e-12));
    }
}
