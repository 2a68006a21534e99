use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `x ↦ A x + b` with the determinant and inverse cached at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineRepr", into = "AffineRepr")]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
    det: f64,
    inverse: Option<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct AffineRepr {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl TryFrom<AffineRepr> for AffineMap {
    type Error = Error;

    fn try_from(r: AffineRepr) -> Result<Self> {
        let d = r.offset.len();
        if r.matrix.len() != d || r.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidBody("affine map: matrix and offset sizes differ".into()));
        }
        Ok(AffineMap::new(
            DMatrix::from_fn(d, d, |i, j| r.matrix[i][j]),
            DVector::from_vec(r.offset),
        ))
    }
}

impl From<AffineMap> for AffineRepr {
    fn from(m: AffineMap) -> Self {
        let d = m.dim();
        AffineRepr {
            matrix: (0..d).map(|i| (0..d).map(|j| m.matrix[(i, j)]).collect()).collect(),
            offset: m.offset.iter().copied().collect(),
        }
    }
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols());
        assert_eq!(matrix.nrows(), offset.len());
        let det = matrix.determinant();
        let inverse = if det != 0.0 { matrix.clone().try_inverse() } else { None };
        AffineMap { matrix, offset, det, inverse }
    }

    pub fn from_rows(rows: &[&[f64]], offset: &[f64]) -> Self {
        let d = offset.len();
        Self::new(
            DMatrix::from_fn(d, d, |i, j| rows[i][j]),
            DVector::from_column_slice(offset),
        )
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim))
    }

    pub fn scaling(dim: usize, s: f64) -> Self {
        Self::new(DMatrix::identity(dim, dim) * s, DVector::zeros(dim))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            DVector::zeros(d),
        )
    }

    pub fn translation(offset: &[f64]) -> Self {
        let d = offset.len();
        Self::new(DMatrix::identity(d, d), DVector::from_column_slice(offset))
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| self.offset[i] + (0..d).map(|j| self.matrix[(i, j)] * x[j]).sum::<f64>())
            .collect()
    }

    /// Linear part only.
    pub fn apply_linear(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `Aᵀ u`, the direction in which the base support function is evaluated.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|j| (0..d).map(|i| self.matrix[(i, j)] * u[i]).sum())
            .collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let inv = self.inverse.as_ref().expect("singular affine map");
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| inv[(i, j)] * (y[j] - self.offset[j])).sum())
            .collect()
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = self.inverse.as_ref()?;
        let off = -(inv * &self.offset);
        Some(AffineMap::new(inv.clone(), off))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(
            &self.matrix * &other.matrix,
            &self.matrix * &other.offset + &self.offset,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let t = AffineMap::from_rows(&[&[2.0, 1.0], &[0.5, 3.0]], &[1.0, -2.0]);
        assert!((t.det() - 5.5).abs() < 1e-15);
        let x = [0.3, -0.7];
        let back = t.apply_inverse(&t.apply(&x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
        let id = t.compose(&t.inverse().unwrap());
        let y = id.apply(&x);
        assert!((y[0] - x[0]).abs() < 1e-14 && (y[1] - x[1]).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let t = AffineMap::from_rows(&[&[2.0, 1.0], &[0.5, 3.0]], &[1.0, -2.0]);
        let s = serde_json::to_string(&t).unwrap();
        let back: AffineMap = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
