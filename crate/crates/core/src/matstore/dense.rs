use nalgebra::DMatrix;

use super::MatrixError;

/// Dense real matrix with finite entries.
///
/// Storage is column-major (nalgebra's layout); constructors that take flat
/// data expect row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if n_rows == 0 || n_cols == 0 {
            return Err(MatrixError::Shape(format!("empty matrix {n_rows}x{n_cols}")));
        }
        if data.len() != n_rows * n_cols {
            return Err(MatrixError::Shape(format!("{} entries for a {n_rows}x{n_cols} matrix", data.len())));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(n_rows, n_cols, &data))
    }

    pub fn from_nalgebra(inner: DMatrix<f64>) -> Result<Self, MatrixError> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(MatrixError::Shape("empty matrix".into()));
        }
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % inner.nrows(), pos / inner.nrows());
            return Err(MatrixError::NonFinite { row: i, col: j });
        }
        Ok(Self { inner })
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: DMatrix::identity(n, n) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, MatrixError> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        Self::from_nalgebra(m)
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.inner
    }

    /// Column-major view of the entries.
    pub fn as_col_major(&self) -> &[f64] {
        self.inner.as_slice()
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let (m, n) = (self.nrows(), self.ncols());
        assert_eq!(x.len(), n, "matvec: x has wrong length");
        assert_eq!(y.len(), m, "matvec: y has wrong length");
        y.iter_mut().for_each(|v| *v = 0.0);
        let data = self.inner.as_slice();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = &data[j * m..(j + 1) * m];
            for (yi, &aij) in y.iter_mut().zip(col) {
                *yi += aij * xj;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x`
    pub fn matvec_t_into(&self, x: &[f64], y: &mut [f64]) {
        let (m, n) = (self.nrows(), self.ncols());
        assert_eq!(x.len(), m, "matvec_t: x has wrong length");
        assert_eq!(y.len(), n, "matvec_t: y has wrong length");
        let data = self.inner.as_slice();
        for (j, yj) in y.iter_mut().enumerate() {
            let col = &data[j * m..(j + 1) * m];
            *yj = col.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols()];
        self.matvec_t_into(x, &mut y);
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// `‖A − Aᵀ‖_F`; infinite for non-square matrices.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.inner - self.inner.transpose()).norm()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol * self.frobenius_norm().max(1.0)
    }

    pub fn transpose(&self) -> Self {
        Self { inner: self.inner.transpose() }
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self, MatrixError> {
        Self::from_nalgebra(&self.inner * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_construction() {
        let a = DenseMatrix::from_row_major(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(a.get(0, 2), 3.0);
        assert_eq!(a.get(1, 0), 4.0);
        assert_eq!(a.matvec(&[1., 0., 1.]), vec![4., 10.]);
        assert_eq!(a.matvec_t(&[1., 1.]), vec![5., 7., 9.]);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_row_major(0, 2, vec![]).is_err());
        let err = DenseMatrix::from_row_major(2, 2, vec![1., f64::NAN, 0., 1.]).unwrap_err();
        assert!(matches!(err, MatrixError::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn symmetry_defect_is_exact_zero_for_symmetric() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2., 1., 1., 3.]).unwrap();
        assert_eq!(a.symmetry_defect(), 0.0);
        let b = DenseMatrix::from_row_major(2, 2, vec![2., 1., 0., 3.]).unwrap();
        assert!(!b.is_symmetric(1e-12));
    }
}
