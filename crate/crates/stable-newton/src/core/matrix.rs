use nalgebra::{DMatrix, DVector};

use super::{CoreError, Vector};

/// Dense symmetric matrix. Symmetry is enforced by construction: writers fill
/// the upper triangle and the lower triangle is mirrored bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: DMatrix::zeros(n, n),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self {
            inner: DMatrix::from_diagonal(&DVector::from_vec(entries.to_vec())),
        }
    }

    /// Build from the upper triangle: `f(i, j)` is queried only for `i <= j`.
    pub fn from_fn_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { inner: m }
    }

    /// Accept a dense matrix that is symmetric up to roundoff; the upper
    /// triangle wins. Asymmetry beyond `1e-9` relative is an error.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self, CoreError> {
        if m.nrows() != m.ncols() {
            return Err(CoreError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mut out = m.clone();
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(CoreError::NotSymmetric);
                }
                out[(j, i)] = m[(i, j)];
            }
        }
        Ok(Self { inner: out })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        Vector::from_dvector(&self.inner * v.as_dvector())
    }

    /// v^T M v
    pub fn quad_form(&self, v: &Vector) -> f64 {
        (v.as_dvector().transpose() * &self.inner * v.as_dvector())[(0, 0)]
    }

    pub fn scale(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            inner: alpha * &self.inner,
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        self.inner.diagonal().iter().copied().collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.inner[(i, j)].abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Eigendecomposition M = Q diag(vals) Q^T.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let se = self.inner.clone().symmetric_eigen();
        (se.eigenvalues.iter().copied().collect(), se.eigenvectors)
    }

    /// Largest eigenvalue estimate by power iteration. Cheap and adequate for
    /// step-size selection; not a certified bound.
    pub fn lambda_max_estimate(&self) -> f64 {
        power_iteration_lambda_max(self.dim(), |v| self.matvec(v))
    }

    pub(crate) fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub(crate) fn from_dmatrix_unchecked(inner: DMatrix<f64>) -> Self {
        Self { inner }
    }
}

/// Power iteration for the dominant eigenvalue of a symmetric PSD operator
/// given as a matvec closure.
pub(crate) fn power_iteration_lambda_max(dim: usize, matvec: impl Fn(&Vector) -> Vector) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    // Deterministic start touching all coordinates unevenly.
    let mut v = Vector::new((0..dim).map(|i| 1.0 + 0.3 * ((i % 7) as f64)).collect()).unwrap();
    let norm = v.norm_l2();
    v = v.scale(1.0 / norm);
    let mut lambda = 0.0;
    for _ in 0..100 {
        let w = matvec(&v);
        let n = w.norm_l2();
        if n <= 1e-300 {
            return 0.0;
        }
        let next = w.scale(1.0 / n);
        let new_lambda = next.dot(&matvec(&next));
        if (new_lambda - lambda).abs() <= 1e-12 * new_lambda.abs().max(1.0) {
            return new_lambda;
        }
        lambda = new_lambda;
        v = next;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_by_construction() {
        let m = SymMatrix::from_fn_upper(3, |i, j| (i + 2 * j) as f64);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn from_dense_rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 5.0, 1.0]);
        assert!(SymMatrix::from_dense(m).is_err());
    }

    #[test]
    fn quad_form_matches_matvec() {
        let m = SymMatrix::from_fn_upper(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let v = Vector::from_slice(&[1.0, 1.0]).unwrap();
        assert_eq!(m.quad_form(&v), v.dot(&m.matvec(&v)));
        assert_eq!(m.quad_form(&v), 6.0);
    }

    #[test]
    fn lambda_max() {
        let m = SymMatrix::diagonal(&[1.0, 5.0, 3.0]);
        assert!((m.lambda_max_estimate() - 5.0).abs() < 1e-8);
    }
}
