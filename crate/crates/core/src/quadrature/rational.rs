//! Exact monomial moments of polygons with dyadic-rational vertices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::geometry::Polygon;

/// `(m, e)` with `x = m · 2^e` exactly.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    (BigInt::from(sign) * BigInt::from(mant), e)
}

fn binomials(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// Integer vertex coordinates sharing one power-of-two scale: `v = k · 2^e`.
struct Scaled {
    coords: Vec<[BigInt; 2]>,
    exp: i64,
}

fn scaled(poly: &Polygon) -> Scaled {
    let parts: Vec<[(BigInt, i64); 2]> = poly.vertices().iter().map(|v| [dyadic(v[0]), dyadic(v[1])]).collect();
    let exp = parts.iter().flatten().filter(|(m, _)| !m.is_zero()).map(|(_, e)| *e).min().unwrap_or(0);
    let coords = parts
        .into_iter()
        .map(|[(mx, ex), (my, ey)]| {
            let up = |m: BigInt, e: i64| if m.is_zero() { m } else { m << ((e - exp) as usize) };
            [up(mx, ex), up(my, ey)]
        })
        .collect();
    Scaled { coords, exp }
}

/// `∫_P x^a y^b` exactly, by Green's theorem `∮ x^{a+1} y^b / (a+1) dy` and the
/// Bernstein form of each edge integral.
pub fn polygon_moment_exact(poly: &Polygon, a: usize, b: usize) -> BigRational {
    let s = scaled(poly);
    moment_scaled(&s, a, b)
}

fn moment_scaled(s: &Scaled, a: usize, b: usize) -> BigRational {
    let m = a + 1;
    let k = b;
    let cm = binomials(m);
    let ck = binomials(k);
    let cmk = binomials(m + k);
    // term[s] collects Σ_{i+j=s} C(m,i) C(k,j) x0^{m-i} x1^i y0^{k-j} y1^j · (y1 - y0).
    let mut term = vec![BigInt::zero(); m + k + 1];
    let n = s.coords.len();
    for e in 0..n {
        let [x0, y0] = &s.coords[e];
        let [x1, y1] = &s.coords[(e + 1) % n];
        let dy = y1 - y0;
        if dy.is_zero() {
            continue;
        }
        let xp: Vec<BigInt> = (0..=m).map(|i| pow(x0, m - i) * pow(x1, i) * &cm[i]).collect();
        let yp: Vec<BigInt> = (0..=k).map(|j| pow(y0, k - j) * pow(y1, j) * &ck[j]).collect();
        for (i, xi) in xp.iter().enumerate() {
            for (j, yj) in yp.iter().enumerate() {
                term[i + j] += xi * yj * &dy;
            }
        }
    }
    let mut total = BigRational::zero();
    for (sidx, t) in term.into_iter().enumerate() {
        if !t.is_zero() {
            total += BigRational::new(t, cmk[sidx].clone());
        }
    }
    let denom = BigInt::from((a + 1) * (m + k + 1));
    let total = total / BigRational::from_integer(denom);
    // Undo the common scale: degree a+b+2 in the coordinates.
    let shift = s.exp * (a + b + 2) as i64;
    if shift >= 0 {
        total * BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        total / BigRational::from_integer(BigInt::one() << (-shift) as usize)
    }
}

fn pow(x: &BigInt, e: usize) -> BigInt {
    num_traits::pow(x.clone(), e)
}

/// Every moment `∫_P x^a y^b` with `a + b ≤ max_degree`, indexed `[a][b]`.
pub fn polygon_moment_table(poly: &Polygon, max_degree: usize) -> Vec<Vec<BigRational>> {
    let s = scaled(poly);
    (0..=max_degree)
        .map(|a| (0..=max_degree - a).map(|b| moment_scaled(&s, a, b)).collect())
        .collect()
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn unit_square_moments() {
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(polygon_moment_exact(&sq, 2, 1), q(1, 6));
        assert_eq!(polygon_moment_exact(&sq, 0, 0), q(1, 1));
    }

    #[test]
    fn triangle_and_symmetric_square() {
        let tri = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(polygon_moment_exact(&tri, 1, 0), q(1, 6));
        // ∫ x^a y^b over the unit simplex = a! b! / (a+b+2)!
        assert_eq!(polygon_moment_exact(&tri, 3, 2), q(6 * 2, 5040));
        let sq = Polygon::new(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert_eq!(polygon_moment_exact(&sq, 2, 0), q(4, 3));
        assert_eq!(polygon_moment_exact(&sq, 3, 0), q(0, 1));
    }

    #[test]
    fn fractional_vertices_are_exact() {
        // [0, 0.1] x [0, 0.3] with the binary values of 0.1 and 0.3.
        let (a, b) = (0.1f64, 0.3f64);
        let sq = Polygon::new(vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]]).unwrap();
        let m = polygon_moment_exact(&sq, 1, 1);
        let qa = BigRational::from_float(a).unwrap();
        let qb = BigRational::from_float(b).unwrap();
        let two = BigRational::from_integer(BigInt::from(2));
        assert_eq!(m, (&qa * &qa / &two) * (&qb * &qb / &two));
    }

    #[test]
    fn table_matches_single_moments() {
        let p = Polygon::new(vec![[0.25, -0.5], [1.5, 0.125], [0.75, 1.0], [-0.5, 0.375]]).unwrap();
        let t = polygon_moment_table(&p, 6);
        assert_eq!(t[2][3], polygon_moment_exact(&p, 2, 3));
        assert!((to_f64(&t[0][0]) - p.area()).abs() < 1e-15);
    }
}
