//! Dense point values of 2- and 4-tensors, plus metric factorization.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest accepted condition number for a metric matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Covariant,
    Contravariant,
}

/// Symmetric 2-tensor at a point, stored as a full row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymTensor2 {
    n: usize,
    data: Vec<f64>,
    valence: Valence,
}

impl SymTensor2 {
    pub fn zeros(n: usize) -> Self {
        SymTensor2 { n, data: vec![0.0; n * n], valence: Valence::Covariant }
    }

    /// Build from the upper triangle; `f(i, j)` is called for `i <= j` only.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = SymTensor2::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                t.data[i * n + j] = v;
                t.data[j * n + i] = v;
            }
        }
        t
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        SymTensor2::from_upper(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn with_valence(mut self, valence: Valence) -> Self {
        self.valence = valence;
        self
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn scaled(&self, s: f64) -> Self {
        SymTensor2 {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
            valence: self.valence,
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &SymTensor2) -> Self {
        assert_eq!(self.n, other.n);
        SymTensor2 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
            valence: self.valence,
        }
    }

    /// `g^{ij} T_ij`
    pub fn trace(&self, ginv: &DMatrix<f64>) -> f64 {
        let n = self.n;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| ginv[(i, j)] * self.get(i, j))
            .sum()
    }

    /// `g^{ik} g^{jl} T_ij U_kl`
    pub fn inner(&self, other: &SymTensor2, ginv: &DMatrix<f64>) -> f64 {
        let a = self.to_matrix();
        let b = other.to_matrix();
        (ginv * a * ginv).component_mul(&b).sum()
    }

    /// Norm induced by the metric, `sqrt(<T, T>)`.
    pub fn norm(&self, ginv: &DMatrix<f64>) -> f64 {
        self.inner(self, ginv).max(0.0).sqrt()
    }

    /// Largest |eigenvalue| of `T` relative to the metric `g`.
    pub fn op_norm(&self, factor: &MetricFactor) -> f64 {
        factor
            .relative_eigenvalues(&self.to_matrix())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Riemann-type tensor `R_{ijkl}` with all indices lowered.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub(crate) fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n * n * n);
        Tensor4 { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Worst violation of the algebraic symmetries, relative to `max_abs`:
    /// `(antisymmetry in (i,j) and (k,l), pair symmetry, first Bianchi)`.
    pub fn symmetry_defects(&self) -> (f64, f64, f64) {
        let n = self.n;
        let scale = self.max_abs().max(1e-300);
        let (mut anti, mut pair, mut bianchi) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        anti = anti
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs());
                        pair = pair.max((r - self.get(k, l, i, j)).abs());
                        bianchi = bianchi
                            .max((r + self.get(j, k, i, l) + self.get(k, i, j, l)).abs());
                    }
                }
            }
        }
        (anti / scale, pair / scale, bianchi / scale)
    }

    /// Sectional curvature of the plane spanned by coordinate vectors `i`, `j`.
    pub fn sectional(&self, g: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        let area = g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)];
        self.get(i, j, j, i) / area
    }
}

/// Factorization of a symmetric positive definite metric matrix.
#[derive(Clone, Debug)]
pub struct MetricFactor {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// Lower Cholesky factor, `g = L L^T`.
    pub chol: DMatrix<f64>,
    pub condition: f64,
}

impl MetricFactor {
    pub fn new(g: DMatrix<f64>, point: &[f64]) -> Result<Self> {
        let eig = SymmetricEigen::new(g.clone());
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite {
                point: point.to_vec(),
                min_eigenvalue: min,
            });
        }
        let condition = max / min;
        if condition > MAX_CONDITION {
            return Err(Error::SingularMetric { point: point.to_vec(), condition });
        }
        let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite {
            point: point.to_vec(),
            min_eigenvalue: min,
        })?;
        let ginv = chol.inverse();
        let l = chol.l();
        Ok(MetricFactor { g, ginv, chol: l, condition })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Eigenvalues of `g^{-1} T`, i.e. of `L^{-1} T L^{-T}`.
    pub fn relative_eigenvalues(&self, t: &DMatrix<f64>) -> Vec<f64> {
        let linv = self
            .chol
            .clone()
            .try_inverse()
            .expect("Cholesky factor is invertible");
        let m = &linv * t * linv.transpose();
        let m = (&m + m.transpose()) * 0.5;
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_is_relative_to_metric() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let f = MetricFactor::new(g.clone(), &[0.0, 0.0]).unwrap();
        // T = g has every relative eigenvalue equal to one.
        let t = SymTensor2::from_matrix(&g);
        assert!((t.op_norm(&f) - 1.0).abs() < 1e-14);
        assert!((t.trace(&f.ginv) - 2.0).abs() < 1e-14);
        assert!((t.norm(&f.ginv) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_and_ill_conditioned() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            MetricFactor::new(bad, &[0.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let thin = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-13]);
        assert!(matches!(
            MetricFactor::new(thin, &[0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }
}
