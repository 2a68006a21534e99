use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::BasisSpec;
use crate::quadrature::{IntegrationMethod, QuadratureRule};
use crate::{Error, Result};

/// Arithmetic effort spent on the factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    /// One additional refinement pass.
    Extended,
}

/// Condition estimate above which a warning is attached to every evaluation.
pub const CONDITION_WARNING: f64 = 1e12;

const CHUNK: usize = 2048;
const GROUPS: usize = 8;
const MAX_PASSES: usize = 6;

/// Cholesky factor of the Gram matrix of a [`BasisSpec`].
///
/// Internally the basis is rescaled to be orthonormal on the reference box and the
/// factor `L` is obtained as the R-factor of `diag(√w) B` by CholeskyQR2, streaming over
/// the nodes of a positive quadrature rule, so `G` itself is never formed from moments.
#[derive(Clone, Debug)]
pub struct GramFactor {
    spec: BasisSpec,
    scales: Vec<f64>,
    l_inv: DMatrix<f64>,
    l: DMatrix<f64>,
    condition: f64,
    method: IntegrationMethod,
    volume: f64,
    shifted: bool,
}

impl GramFactor {
    pub fn from_rule(spec: BasisSpec, rule: &QuadratureRule, precision: Precision) -> Result<GramFactor> {
        let n = spec.size();
        let mut l = DMatrix::<f64>::identity(n, n);
        let mut l_inv = DMatrix::<f64>::identity(n, n);
        let mut passes = match precision {
            Precision::Double => 2,
            Precision::Extended => 3,
        };
        let mut shifted = false;
        let mut pass = 0;
        while pass < passes {
            let g = gram_pass(&spec, rule, if pass == 0 { None } else { Some(&l_inv) });
            let chol = match nalgebra::Cholesky::new(g.clone()) {
                Some(c) => c,
                None if passes < MAX_PASSES => {
                    // Shifted CholeskyQR: the shifted factor only preconditions, the
                    // extra pass restores accuracy.
                    let m = rule.len() as f64;
                    let nf = n as f64;
                    let s = 11.0 * (m * nf + nf * (nf + 1.0)) * f64::EPSILON * g.trace();
                    let gs = g + DMatrix::identity(n, n) * s;
                    shifted = true;
                    passes += 1;
                    nalgebra::Cholesky::new(gs).ok_or(Error::NotPositiveDefinite)?
                }
                None => return Err(Error::NotPositiveDefinite),
            };
            let lp = chol.l();
            let lp_inv = lp
                .clone()
                .solve_lower_triangular(&DMatrix::identity(n, n))
                .ok_or(Error::NotPositiveDefinite)?;
            l = &l * lp;
            l_inv = lp_inv * &l_inv;
            pass += 1;
        }
        for i in 0..n {
            if !(l[(i, i)] > 0.0) || !l[(i, i)].is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
        }
        let condition = condition_estimate(&l, &l_inv);
        Ok(GramFactor {
            scales: spec.scales(),
            spec,
            l_inv,
            l,
            condition,
            method: rule.method,
            volume: rule.total_weight(),
            shifted,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn size(&self) -> usize {
        self.spec.size()
    }

    /// Lower-triangular `F` with `F Fᵀ = G` for the unnormalised basis of [`BasisSpec::eval_into`].
    pub fn factor(&self) -> DMatrix<f64> {
        let mut f = self.l.clone();
        for (i, s) in self.scales.iter().enumerate() {
            for j in 0..f.ncols() {
                f[(i, j)] /= s;
            }
        }
        f
    }

    /// Estimated 2-norm condition number of the rescaled Gram matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn method(&self) -> IntegrationMethod {
        self.method
    }

    /// Volume of the body according to the rule used for the factorization.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn shifted(&self) -> bool {
        self.shifted
    }

    /// `L⁻¹ p̃(x)`: values at `x` of the orthonormal basis induced by the body.
    pub fn orthonormal_values(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        let mut p = vec![0.0; n];
        self.spec.eval_scaled_into(x, &mut p);
        (0..n)
            .map(|i| (0..=i).map(|j| self.l_inv[(i, j)] * p[j]).sum())
            .collect()
    }

    /// `p(x)ᵀ G⁻¹ p(x)`.
    pub fn kernel_diag(&self, x: &[f64]) -> f64 {
        self.orthonormal_values(x).iter().map(|v| v * v).sum()
    }

    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        let a = self.orthonormal_values(x);
        let b = self.orthonormal_values(y);
        a.iter().zip(&b).map(|(a, b)| a * b).sum()
    }
}

/// `Σ_k w_k q(y_k) q(y_k)ᵀ` with `q = T p̃`, `T` lower triangular (identity if `None`).
/// Nodes are split into a fixed number of contiguous groups whose partial sums are added
/// in order, so the result is independent of scheduling.
fn gram_pass(spec: &BasisSpec, rule: &QuadratureRule, t: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let n = spec.size();
    let m = rule.len();
    let per_group = m.div_ceil(GROUPS).max(1);
    let partials: Vec<Vec<f64>> = (0..GROUPS)
        .into_par_iter()
        .map(|g| {
            let mut acc = vec![0.0; n * n];
            let lo = (g * per_group).min(m);
            let hi = ((g + 1) * per_group).min(m);
            let mut a = vec![0.0; CHUNK * n];
            let mut q = vec![0.0; CHUNK * n];
            let mut start = lo;
            while start < hi {
                let rows = CHUNK.min(hi - start);
                for r in 0..rows {
                    let k = start + r;
                    let row = &mut a[r * n..(r + 1) * n];
                    spec.eval_scaled_into(rule.node(k), row);
                    let sw = rule.weights[k].sqrt();
                    row.iter_mut().for_each(|v| *v *= sw);
                }
                let src = match t {
                    None => &a,
                    Some(t) => {
                        // q = a · Tᵀ; T is column-major, so Tᵀ[k][j] = T(j,k) sits at k·n + j.
                        unsafe {
                            matrixmultiply::dgemm(
                                rows, n, n, 1.0,
                                a.as_ptr(), n as isize, 1,
                                t.as_ptr(), n as isize, 1,
                                0.0,
                                q.as_mut_ptr(), n as isize, 1,
                            );
                        }
                        &q
                    }
                };
                // acc += srcᵀ · src
                unsafe {
                    matrixmultiply::dgemm(
                        n, rows, n, 1.0,
                        src.as_ptr(), 1, n as isize,
                        src.as_ptr(), n as isize, 1,
                        1.0,
                        acc.as_mut_ptr(), n as isize, 1,
                    );
                }
                start += rows;
            }
            acc
        })
        .collect();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for p in &partials {
        for (gv, pv) in g.as_mut_slice().iter_mut().zip(p) {
            *gv += pv;
        }
    }
    // Symmetrize rounding differences.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `λ_max / λ_min` of `L Lᵀ` by power iteration on `L Lᵀ` and on its inverse.
fn condition_estimate(l: &DMatrix<f64>, l_inv: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    let power = |apply: &dyn Fn(&nalgebra::DVector<f64>) -> nalgebra::DVector<f64>| {
        let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618).sin() * 0.5);
        v /= v.norm();
        let mut est = 0.0;
        for _ in 0..60 {
            let w = apply(&v);
            est = w.norm();
            if est == 0.0 {
                break;
            }
            v = w / est;
        }
        est
    };
    let big = power(&|v| l * (l.transpose() * v));
    let inv_big = power(&|v| l_inv.transpose() * (l_inv * v));
    big * inv_big
}
