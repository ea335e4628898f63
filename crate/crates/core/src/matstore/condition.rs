use nalgebra::SVD;

use super::{norm2, DenseMatrix, MatrixError, ProblemInstance};

/// Condition numbers of a problem instance, all in the spectral norm except
/// `kappa_f_forward`, which replaces `‖A‖₂` by the RMS singular value
/// `‖A‖_F/√n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `κ(A,x) = ‖A‖‖x‖/‖Ax‖`
    pub kappa_forward: f64,
    /// `κ(A,b) = ‖A⁻¹‖‖b‖/‖A⁻¹b‖`
    pub kappa_backward: f64,
    /// `κ(A) = ‖A‖‖A⁻¹‖`
    pub kappa_matrix: f64,
    /// `κ_F(A,x) = (‖A‖_F/√n)(‖x‖/‖b‖)`
    pub kappa_f_forward: f64,
}

/// Extreme singular values from a full SVD.
pub fn singular_extremes(a: &DenseMatrix) -> (f64, f64) {
    let svd = SVD::new(a.as_nalgebra().clone(), false, false);
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

pub fn matrix_condition(a: &DenseMatrix) -> Result<f64, MatrixError> {
    let (smax, smin) = singular_extremes(a);
    if smin <= smax * f64::EPSILON {
        return Err(MatrixError::Singular("smallest singular value is zero to working precision".into()));
    }
    Ok(smax / smin)
}

pub fn condition_report(p: &ProblemInstance) -> Result<ConditionReport, MatrixError> {
    let x =
        p.x_true.as_deref().ok_or_else(|| MatrixError::Singular("condition report needs the true solution".into()))?;
    let a = &p.a;
    let n = a.nrows() as f64;
    let (smax, smin) = singular_extremes(a);
    if smin <= smax * f64::EPSILON {
        return Err(MatrixError::Singular("smallest singular value is zero to working precision".into()));
    }
    let x_norm = norm2(x);
    let ax_norm = norm2(&a.matvec(x));
    let b_norm = norm2(&p.b);
    if x_norm == 0.0 || b_norm == 0.0 {
        return Err(MatrixError::Singular("zero right-hand side".into()));
    }
    // A⁻¹b is the stored solution; ‖b‖ is taken as given.
    Ok(ConditionReport {
        kappa_forward: smax * x_norm / ax_norm,
        kappa_backward: (1.0 / smin) * b_norm / x_norm,
        kappa_matrix: smax / smin,
        kappa_f_forward: (a.frobenius_norm() / n.sqrt()) * (x_norm / b_norm),
    })
}

/// `κ_A(A,x) = ‖A‖₂ ‖x‖_A / ‖Ax‖_A` with the A-measure `‖v‖_A = |vᵀAv|^½`.
/// For SPD matrices this is the forward condition number in the energy norm.
pub fn anorm_forward_condition(a: &DenseMatrix, x: &[f64]) -> f64 {
    let (smax, _) = singular_extremes(a);
    let ax = a.matvec(x);
    let aax = a.matvec(&ax);
    let xa = dot(x, &ax).abs().sqrt();
    let axa = dot(&ax, &aax).abs().sqrt();
    smax * xa / axa
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
