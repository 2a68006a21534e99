use nalgebra::{DMatrix, DVector};

use crate::geometry::{AffineMap, ConvexBody};
use crate::linalg::direction_grid;
use crate::Result;

/// Affine `T` with `B ⊂ T(D) ⊂ d·B` (approximately): `T` sends the maximal inscribed
/// ellipsoid, computed against support constraints in sampled directions, to the unit ball.
///
/// The ellipsoid `{c + A u : |u| ≤ 1}` lies in `D` iff `θ·c + |Aθ| ≤ h_D(θ)` for every
/// direction θ. `log det A` is maximised under a log barrier by gradient ascent with a
/// decreasing barrier weight.
pub fn john_map(body: &ConvexBody) -> Result<AffineMap> {
    let d = body.dim();
    if d == 1 {
        let (lo, hi) = body.bounding_box()[0];
        return Ok(AffineMap::from_rows(&[&[2.0 / (hi - lo)]], &[-(hi + lo) / (hi - lo)]));
    }
    let dirs: Vec<DVector<f64>> = direction_grid(d, 256, 600).into_iter().map(DVector::from_vec).collect();
    let h: Vec<f64> = dirs.iter().map(|t| body.support(t.as_slice())).collect();
    let c0 = body.interior_point();
    let mut c = DVector::from_vec(c0.clone());
    let r0 = dirs
        .iter()
        .zip(&h)
        .map(|(t, h)| h - t.dot(&c))
        .fold(f64::INFINITY, f64::min);
    let mut a = DMatrix::<f64>::identity(d, d) * (0.5 * r0);

    let slack = |a: &DMatrix<f64>, c: &DVector<f64>| -> Option<Vec<f64>> {
        let s: Vec<f64> = dirs.iter().zip(&h).map(|(t, h)| h - t.dot(c) - (a * t).norm()).collect();
        s.iter().all(|v| *v > 0.0).then_some(s)
    };
    let objective = |a: &DMatrix<f64>, c: &DVector<f64>, mu: f64| -> Option<f64> {
        let det = a.determinant();
        if det <= 0.0 {
            return None;
        }
        let s = slack(a, c)?;
        Some(det.ln() + mu * s.iter().map(|v| v.ln()).sum::<f64>())
    };

    let mut mu = 1e-1 / dirs.len() as f64 * d as f64;
    for _ in 0..6 {
        for _ in 0..150 {
            let s = match slack(&a, &c) {
                Some(s) => s,
                None => break,
            };
            let a_inv = match a.clone().try_inverse() {
                Some(m) => m,
                None => break,
            };
            let mut ga = a_inv.transpose();
            let mut gc = DVector::<f64>::zeros(d);
            for ((t, si), _) in dirs.iter().zip(&s).zip(&h) {
                let at = &a * t;
                let n = at.norm();
                ga -= (&at * t.transpose()) * (mu / (si * n));
                gc -= t * (mu / si);
            }
            let ga = (&ga + ga.transpose()) * 0.5;
            let f0 = objective(&a, &c, mu).unwrap_or(f64::NEG_INFINITY);
            let scale = r0 * r0;
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-12 {
                let a1 = &a + &ga * (step * scale);
                let c1 = &c + &gc * (step * scale);
                if let Some(f1) = objective(&a1, &c1, mu) {
                    if f1 > f0 {
                        a = a1;
                        c = c1;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 0.1;
    }
    let a_inv = a.try_inverse().unwrap_or_else(|| DMatrix::identity(d, d));
    let offset = -(&a_inv * &c);
    Ok(AffineMap::new(a_inv, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_is_mapped_to_a_near_disc() {
        let base = ConvexBody::unit_ball(2);
        let t = AffineMap::from_rows(&[&[2.0, 0.5], &[0.0, 0.7]], &[3.0, 1.0]);
        let body = ConvexBody::affine(t, base).unwrap();
        let j = john_map(&body).unwrap();
        let image = ConvexBody::affine(j, body).unwrap();
        for k in 0..32 {
            let th = k as f64 * 0.19634954;
            let h = image.support(&[th.cos(), th.sin()]);
            assert!(h > 0.97 && h < 1.1, "{h}");
        }
    }

    #[test]
    fn square_sandwich() {
        let body = ConvexBody::polygon(vec![[0.0, 0.0], [4.0, 0.0], [4.0, 1.0], [0.0, 1.0]]).unwrap();
        let j = john_map(&body).unwrap();
        let image = ConvexBody::affine(j, body).unwrap();
        for k in 0..64 {
            let th = k as f64 * 0.0981747704;
            let h = image.support(&[th.cos(), th.sin()]);
            assert!(h >= 0.99 && h <= 2.0 * 1.05, "{h}");
        }
    }
}
