use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::geometry::ConvexBody;
use crate::quadrature::{graded_indices, QuadratureRule};

/// Affine coordinates `z = A (x − c)` in which the reference box is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub center: Vec<f64>,
    /// `A`, row-major.
    pub rows: Vec<f64>,
}

impl Frame {
    fn apply(&self, x: &[f64], z: &mut [f64]) {
        let d = self.center.len();
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (0..d).map(|j| self.rows[i * d + j] * (x[j] - self.center[j])).sum();
        }
    }
}

/// Tensor Legendre basis of total degree `≤ n` on a reference box, in graded
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub dim: usize,
    pub degree: usize,
    /// Box in frame coordinates (plain coordinates without a frame).
    pub bbox: Vec<(f64, f64)>,
    pub frame: Option<Frame>,
    /// Per-axis degrees, `dim` entries per element.
    exponents: Vec<u16>,
}

impl BasisSpec {
    pub fn new(dim: usize, degree: usize, bbox: Vec<(f64, f64)>) -> BasisSpec {
        assert_eq!(bbox.len(), dim);
        let exponents = graded_indices(dim, degree)
            .into_iter()
            .flat_map(|m| m.0.into_iter().map(|e| e as u16))
            .collect();
        BasisSpec { dim, degree, bbox, frame: None, exponents }
    }

    pub fn for_body(body: &ConvexBody, degree: usize) -> BasisSpec {
        BasisSpec::new(body.dim(), degree, body.bounding_box())
    }

    /// Like [`for_body`](Self::for_body), but taken in coordinates whitened by the second
    /// moments of `rule` when the body fills that box noticeably better. Sheared or tilted
    /// bodies otherwise leave most of their bounding box empty and the Gram matrix degrades.
    pub fn adapted(body: &ConvexBody, degree: usize, rule: &QuadratureRule) -> BasisSpec {
        let plain = BasisSpec::for_body(body, degree);
        let d = body.dim();
        if d < 2 || rule.is_empty() {
            return plain;
        }
        let total = rule.total_weight();
        let mut mean = vec![0.0; d];
        for k in 0..rule.len() {
            for (m, x) in mean.iter_mut().zip(rule.node(k)) {
                *m += rule.weights[k] * x / total;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for k in 0..rule.len() {
            let x = rule.node(k);
            for i in 0..d {
                for j in 0..=i {
                    cov[(i, j)] += rule.weights[k] * (x[i] - mean[i]) * (x[j] - mean[j]) / total;
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cov[(j, i)] = cov[(i, j)];
            }
        }
        let Some(a) = nalgebra::Cholesky::new(cov).and_then(|c| c.l().solve_lower_triangular(&DMatrix::identity(d, d)))
        else {
            return plain;
        };
        let mut rows = Vec::with_capacity(d * d);
        let mut bbox = Vec::with_capacity(d);
        for i in 0..d {
            let ai: Vec<f64> = (0..d).map(|j| a[(i, j)]).collect();
            let neg: Vec<f64> = ai.iter().map(|v| -v).collect();
            let shift: f64 = ai.iter().zip(&mean).map(|(p, q)| p * q).sum();
            bbox.push((-body.support(&neg) - shift, body.support(&ai) - shift));
            rows.extend(ai);
        }
        let plain_volume: f64 = plain.bbox.iter().map(|(lo, hi)| hi - lo).product();
        let framed_volume = bbox.iter().map(|(lo, hi)| hi - lo).product::<f64>() / a.determinant().abs();
        if !(framed_volume < 0.99 * plain_volume) {
            return plain;
        }
        BasisSpec { bbox, frame: Some(Frame { center: mean, rows }), ..plain }
    }

    /// `C(n + d, d)`.
    pub fn size(&self) -> usize {
        self.exponents.len() / self.dim.max(1)
    }

    pub fn exponents(&self, i: usize) -> &[u16] {
        &self.exponents[i * self.dim..(i + 1) * self.dim]
    }

    /// Unnormalised values: products of `P_k` evaluated at the box-relative coordinate.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_impl(x, out, false);
    }

    /// Values of the basis orthonormal on the reference box.
    pub fn eval_scaled_into(&self, x: &[f64], out: &mut [f64]) {
        self.eval_impl(x, out, true);
    }

    /// Per-element factor turning [`eval_into`](Self::eval_into) values into
    /// [`eval_scaled_into`](Self::eval_scaled_into) values.
    pub fn scales(&self) -> Vec<f64> {
        (0..self.size())
            .map(|i| {
                self.exponents(i)
                    .iter()
                    .zip(&self.bbox)
                    .map(|(&k, (lo, hi))| ((2 * k as usize + 1) as f64 / (hi - lo)).sqrt())
                    .product()
            })
            .collect()
    }

    fn eval_impl(&self, x: &[f64], out: &mut [f64], scaled: bool) {
        let n = self.degree;
        let mut z = [0.0; 3];
        let x = match &self.frame {
            Some(f) => {
                f.apply(x, &mut z[..self.dim]);
                &z[..self.dim]
            }
            None => x,
        };
        let mut table = vec![0.0; self.dim * (n + 1)];
        for (a, &(lo, hi)) in self.bbox.iter().enumerate() {
            let t = (2.0 * x[a] - lo - hi) / (hi - lo);
            let row = &mut table[a * (n + 1)..(a + 1) * (n + 1)];
            legendre_into(t, row);
            if scaled {
                for (k, v) in row.iter_mut().enumerate() {
                    *v *= ((2 * k + 1) as f64 / (hi - lo)).sqrt();
                }
            }
        }
        for (i, o) in out.iter_mut().enumerate().take(self.size()) {
            let mut v = 1.0;
            for (a, &k) in self.exponents(i).iter().enumerate() {
                v *= table[a * (n + 1) + k as usize];
            }
            *o = v;
        }
    }
}

/// `P_0(t), …, P_{len-1}(t)` by the three-term recurrence.
pub fn legendre_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Values of the basis at `x`.
pub fn basis_eval(spec: &BasisSpec, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; spec.size()];
    spec.eval_into(x, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = BasisSpec::new(1, 0, vec![(-1.0, 1.0)]);
        assert_eq!(basis_eval(&s, &[0.3]), vec![1.0]);
        let s = BasisSpec::new(1, 2, vec![(-1.0, 1.0)]);
        assert_eq!(basis_eval(&s, &[0.0]), vec![1.0, 0.0, -0.5]);
        let s = BasisSpec::new(2, 1, vec![(-1.0, 1.0); 2]);
        assert_eq!(basis_eval(&s, &[0.0, 0.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn graded_order_in_two_dimensions() {
        let s = BasisSpec::new(2, 2, vec![(0.0, 1.0); 2]);
        let e: Vec<&[u16]> = (0..s.size()).map(|i| s.exponents(i)).collect();
        assert_eq!(e, vec![&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]);
    }

    #[test]
    fn scaled_is_unnormalised_times_scale() {
        let s = BasisSpec::new(2, 4, vec![(-0.5, 2.0), (1.0, 3.0)]);
        let x = [0.7, 1.4];
        let mut a = vec![0.0; s.size()];
        let mut b = vec![0.0; s.size()];
        s.eval_into(&x, &mut a);
        s.eval_scaled_into(&x, &mut b);
        for ((a, b), c) in a.iter().zip(&b).zip(s.scales()) {
            assert!((a * c - b).abs() < 1e-14);
        }
    }
}
