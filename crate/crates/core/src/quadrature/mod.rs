//! Integration of polynomials over convex bodies.
//!
//! Polygons integrate monomials exactly in rational arithmetic. Every other body gets a
//! positive-weight rule ([`QuadratureRule`]) that is exact, up to rounding, for
//! polynomials of the requested degree: planar bodies through Green's theorem in polar
//! form around an interior point, rotation-invariant 3D bodies through their meridian
//! section, affine images by pulling back the rule of the base body. Bodies without an
//! explicit boundary fall back to stratified Monte Carlo.

mod gauss;
mod montecarlo;
mod rational;
mod rules;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub use gauss::{gauss_legendre, gauss_on};
pub use montecarlo::{monte_carlo_integral, MC_DEFAULT_SAMPLES, MC_DEFAULT_SEED};
pub use rational::{polygon_moment_exact, polygon_moment_table, to_f64};
pub use rules::{rule_for, QuadratureRule};

use crate::christoffel::{max_degree, BasisSpec};
use crate::geometry::{ConvexBody, Polygon};
use crate::{Error, Result};

/// Exponent tuple of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
    }
}

impl Ord for MultiIndex {
    /// Graded lexicographic: total degree first, then larger leading exponents first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponents of total degree at most `n` in graded lexicographic order.
pub fn graded_indices(dim: usize, n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for deg in 0..=n {
        let mut cur = vec![0u32; dim];
        fill(&mut cur, 0, deg, &mut out);
    }
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: usize, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = left as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e as u32;
        fill(cur, pos + 1, left - e, out);
    }
    cur[pos] = 0;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMethod {
    ExactRational,
    ArcQuadrature,
    Revolution,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub abs_error_bound: f64,
    pub method: IntegrationMethod,
}

/// Polynomial in monomial form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub terms: Vec<(MultiIndex, f64)>,
}

impl Polynomial {
    pub fn constant(dim: usize, c: f64) -> Polynomial {
        Polynomial { dim, terms: vec![(MultiIndex(vec![0; dim]), c)] }
    }

    pub fn monomial(exponents: &[u32]) -> Polynomial {
        Polynomial {
            dim: exponents.len(),
            terms: vec![(MultiIndex(exponents.to_vec()), 1.0)],
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.monomial(x)).sum()
    }
}

/// Options for [`body_integral_fn`].
#[derive(Clone, Debug)]
pub struct IntegrationOptions {
    /// Use stratified Monte Carlo even when a deterministic rule exists.
    pub force_monte_carlo: bool,
    pub seed: u64,
    pub samples: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            force_monte_carlo: false,
            seed: MC_DEFAULT_SEED,
            samples: MC_DEFAULT_SAMPLES,
        }
    }
}

fn check_degree(body: &ConvexBody, degree: usize) -> Result<()> {
    let max = 2 * max_degree(body.dim());
    if degree > max {
        return Err(Error::DegreeTooLarge { degree, max, dim: body.dim() });
    }
    Ok(())
}

/// `∫_P x^α` as an exact rational.
pub fn polygon_moment(poly: &Polygon, alpha: &MultiIndex) -> Result<BigRational> {
    let max = 2 * max_degree(2);
    if alpha.degree() > max {
        return Err(Error::DegreeTooLarge { degree: alpha.degree(), max, dim: 2 });
    }
    Ok(polygon_moment_exact(poly, alpha.0[0] as usize, alpha.0[1] as usize))
}

/// `Γ(k / 2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    if k % 2 == 0 {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        // Γ(1/2) = √π, Γ(x + 1) = x Γ(x).
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while (2.0 * x) as u32 != k {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// `∫_{B^d} x^α` over the unit ball.
pub fn ball_moment(dim: usize, alpha: &MultiIndex) -> f64 {
    assert_eq!(alpha.dim(), dim);
    if alpha.0.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let num: f64 = alpha.0.iter().map(|&e| gamma_half(e + 1)).product();
    // Γ(1 + (|α| + d)/2) = Γ((|α| + d + 2)/2).
    num / gamma_half(alpha.degree() as u32 + dim as u32 + 2)
}

/// `∫_D f` for a polynomial `f`; exact for polygons.
pub fn body_integral(body: &ConvexBody, f: &Polynomial) -> Result<IntegralResult> {
    check_degree(body, f.degree())?;
    if let ConvexBody::Polygon(p) = body {
        let mut total = BigRational::zero();
        for (m, c) in &f.terms {
            let Some(cq) = BigRational::from_float(*c) else {
                return Err(Error::ParameterOutOfRange("non-finite coefficient".into()));
            };
            total += cq * polygon_moment(p, m)?;
        }
        return Ok(IntegralResult {
            value: to_f64(&total),
            abs_error_bound: 0.0,
            method: IntegrationMethod::ExactRational,
        });
    }
    body_integral_fn(body, f.degree(), &|x| f.eval(x), &IntegrationOptions::default())
}

/// `∫_D f` for a function that is a polynomial of total degree `degree`.
///
/// The error bound of deterministic rules is the disagreement with a finer rule plus a
/// rounding allowance; Monte Carlo reports three standard errors.
pub fn body_integral_fn(
    body: &ConvexBody,
    degree: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    opts: &IntegrationOptions,
) -> Result<IntegralResult> {
    check_degree(body, degree)?;
    if opts.force_monte_carlo {
        return monte_carlo_integral(body, f, opts.samples, opts.seed);
    }
    let rule = rule_for(body, degree)?;
    if rule.method == IntegrationMethod::MonteCarlo {
        return monte_carlo_integral(body, f, opts.samples, opts.seed);
    }
    let (value, abs_sum) = rule.integrate_with_abs(f);
    let finer = rule_for(body, degree + 8)?;
    let (check, _) = finer.integrate_with_abs(f);
    Ok(IntegralResult {
        value,
        abs_error_bound: (value - check).abs() + 1e-14 * abs_sum,
        method: rule.method,
    })
}

/// Basis in which [`gram_matrix`] is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramBasis {
    /// The tensor Legendre basis of [`BasisSpec`], unnormalised.
    Legendre,
    Monomial,
}

/// `G[i][j] = ∫_D b_i b_j`, symmetric by construction.
pub fn gram_matrix(body: &ConvexBody, n: usize, basis: GramBasis) -> Result<DMatrix<f64>> {
    let d = body.dim();
    if n > max_degree(d) {
        return Err(Error::DegreeTooLarge { degree: n, max: max_degree(d), dim: d });
    }
    let indices = graded_indices(d, n);
    let size = indices.len();
    if let (ConvexBody::Polygon(p), GramBasis::Monomial) = (body, basis) {
        let table = polygon_moment_table(p, 2 * n);
        return Ok(DMatrix::from_fn(size, size, |i, j| {
            let a = (indices[i].0[0] + indices[j].0[0]) as usize;
            let b = (indices[i].0[1] + indices[j].0[1]) as usize;
            to_f64(&table[a][b])
        }));
    }
    let rule = rule_for(body, 2 * n)?;
    let spec = BasisSpec::for_body(body, n);
    let mut g = DMatrix::<f64>::zeros(size, size);
    let mut values = vec![0.0; size];
    for k in 0..rule.len() {
        let x = rule.node(k);
        match basis {
            GramBasis::Legendre => spec.eval_into(x, &mut values),
            GramBasis::Monomial => {
                for (v, m) in values.iter_mut().zip(&indices) {
                    *v = m.monomial(x);
                }
            }
        }
        let w = rule.weights[k];
        for i in 0..size {
            let wi = w * values[i];
            for j in i..size {
                g[(i, j)] += wi * values[j];
            }
        }
    }
    for i in 0..size {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    Ok(g)
}

/// Moments `∫_D x^α` for `|α| ≤ degree` as CSV rows `exponents,value,method`.
pub fn moment_table_csv(body: &ConvexBody, degree: usize) -> Result<String> {
    check_degree(body, degree)?;
    let mut out = String::from("exponents,value,method\n");
    for m in graded_indices(body.dim(), degree) {
        let f = Polynomial { dim: body.dim(), terms: vec![(m.clone(), 1.0)] };
        let r = body_integral(body, &f)?;
        let exps: Vec<String> = m.0.iter().map(|e| e.to_string()).collect();
        let method = serde_json::to_string(&r.method)?;
        out.push_str(&format!("{},{:e},{}\n", exps.join(" "), r.value, method.trim_matches('"')));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn graded_order() {
        let idx = graded_indices(2, 2);
        let exps: Vec<Vec<u32>> = idx.iter().map(|m| m.0.clone()).collect();
        assert_eq!(exps, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(graded_indices(3, 14).len(), 680);
    }

    /// Independent polar midpoint rule for ∫_{B²} x^a y^b.
    fn polar_oracle(a: i32, b: i32) -> f64 {
        let (nt, nr) = (2000, 2000);
        let mut s = 0.0;
        for i in 0..nt {
            let t = 2.0 * PI * (i as f64 + 0.5) / nt as f64;
            let ang = t.cos().powi(a) * t.sin().powi(b);
            for j in 0..nr {
                let r = (j as f64 + 0.5) / nr as f64;
                s += ang * r.powi(a + b + 1);
            }
        }
        s * (2.0 * PI / nt as f64) / nr as f64
    }

    #[test]
    fn ball_moments() {
        assert!((ball_moment(2, &MultiIndex(vec![0, 0])) - PI).abs() < 1e-15);
        let m20 = ball_moment(2, &MultiIndex(vec![2, 0]));
        let m22 = ball_moment(2, &MultiIndex(vec![2, 2]));
        assert!((m20 - polar_oracle(2, 0)).abs() < 1e-6);
        assert!((m22 - polar_oracle(2, 2)).abs() < 1e-6);
        // Frozen from the oracle above.
        assert!((m20 - PI / 4.0).abs() < 1e-15);
        assert!((m22 - PI / 24.0).abs() < 1e-15);
        assert!((ball_moment(3, &MultiIndex(vec![0, 0, 0])) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_moment(1, &MultiIndex(vec![4])) - 0.4).abs() < 1e-15);
        assert_eq!(ball_moment(2, &MultiIndex(vec![1, 2])), 0.0);
    }

    #[test]
    fn integral_examples() {
        let disc = ConvexBody::unit_ball(2);
        let r = body_integral(&disc, &Polynomial::constant(2, 1.0)).unwrap();
        assert!((r.value - PI).abs() < 1e-13);
        assert_eq!(r.method, IntegrationMethod::ArcQuadrature);
        let r = body_integral(&ConvexBody::HalfBall3, &Polynomial::constant(3, 1.0)).unwrap();
        assert!((r.value - 2.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(r.method, IntegrationMethod::Revolution);
        let sq = ConvexBody::square(-1.0, 1.0);
        let r = body_integral(&sq, &Polynomial::monomial(&[2, 0])).unwrap();
        assert_eq!(r.value, 4.0 / 3.0);
        assert_eq!(r.abs_error_bound, 0.0);
    }

    #[test]
    fn gram_examples() {
        let disc = ConvexBody::unit_ball(2);
        let g = gram_matrix(&disc, 1, GramBasis::Monomial).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![PI, PI / 4.0, PI / 4.0]));
        assert!((&g - &expect).abs().max() < 1e-13);
        let sq = ConvexBody::square(-1.0, 1.0);
        let g = gram_matrix(&sq, 1, GramBasis::Monomial).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 4.0 / 3.0, 4.0 / 3.0]));
        assert_eq!(g, expect);
        let g = gram_matrix(&ConvexBody::lp_ball(1.5, 2).unwrap(), 4, GramBasis::Legendre).unwrap();
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn degree_limit() {
        let sq = ConvexBody::square(-1.0, 1.0);
        assert!(matches!(
            body_integral(&sq, &Polynomial::monomial(&[40, 30])),
            Err(Error::DegreeTooLarge { .. })
        ));
    }
}
