//! Oracle-grade dense solve: partial-pivoting LU followed by a few rounds
//! of iterative refinement with residuals accumulated in double-double.

use nalgebra::DVector;

use super::{DenseMatrix, MatrixError};

const REFINEMENT_ROUNDS: usize = 4;

/// Error-free product: `a * b = p + e`.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum: `a + b = s + e`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

/// `b − A x` with each row accumulated in twice the working precision.
pub(crate) fn compensated_residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    compensated_residual_pair(a, x, None, b)
}

/// `b − A (x_hi + x_lo)` accumulated in twice the working precision.
pub(crate) fn compensated_residual_pair(a: &DenseMatrix, hi: &[f64], lo: Option<&[f64]>, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let data = a.as_col_major();
    (0..n)
        .map(|i| {
            let (mut s, mut c) = (b[i], 0.0);
            for (j, &xj) in hi.iter().enumerate() {
                let aij = data[j * n + i];
                let (p, pe) = two_prod(-aij, xj);
                let (t, te) = two_sum(s, p);
                s = t;
                c += te + pe;
                if let Some(lo) = lo {
                    c -= aij * lo[j];
                }
            }
            s + c
        })
        .collect()
}

pub fn direct_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, MatrixError> {
    if !a.is_square() {
        return Err(MatrixError::Shape(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    if b.len() != n {
        return Err(MatrixError::Shape(format!("rhs length {} for dimension {n}", b.len())));
    }
    let lu = a.as_nalgebra().clone().lu();
    let u = lu.u();
    let scale = a.as_col_major().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pivot_floor = n as f64 * f64::EPSILON * scale;
    if let Some(i) = (0..n).find(|&i| u[(i, i)].abs() <= pivot_floor) {
        return Err(MatrixError::Singular(format!("pivot {i} is zero to working precision")));
    }
    let mut x =
        lu.solve(&DVector::from_column_slice(b)).ok_or_else(|| MatrixError::Singular("LU solve failed".into()))?;
    for _ in 0..REFINEMENT_ROUNDS {
        let r = compensated_residual(a, x.as_slice(), b);
        let dx = match lu.solve(&DVector::from_vec(r)) {
            Some(dx) => dx,
            None => break,
        };
        x += &dx;
        if dx.norm() <= f64::EPSILON * x.norm() {
            break;
        }
    }
    Ok(x.as_slice().to_vec())
}

/// Low-order correction `x_lo` such that `x + x_lo` solves the system to
/// roughly twice the working precision.
pub fn residual_correction(a: &DenseMatrix, x: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let r = compensated_residual(a, x, b);
    a.as_nalgebra().clone().lu().solve(&DVector::from_vec(r)).map(|d| d.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(direct_solve(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_inversion() {
        let a = DenseMatrix::from_diagonal(&[2.0, 4.0]).unwrap();
        assert_eq!(direct_solve(&a, &[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1., 2., 2., 4.]).unwrap();
        assert!(matches!(direct_solve(&a, &[1., 1.]), Err(MatrixError::Singular(_))));
    }

    #[test]
    fn compensated_residual_is_exact_on_integers() {
        let a = DenseMatrix::from_row_major(2, 2, vec![3., 1., 1., 2.]).unwrap();
        assert_eq!(compensated_residual(&a, &[1., 1.], &[4., 3.]), vec![0., 0.]);
    }
}
