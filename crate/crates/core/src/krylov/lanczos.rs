use nalgebra::DMatrix;

use crate::matstore::DenseMatrix;

use super::cg::SYMMETRY_TOL;
use super::trace::SolverError;
use super::vecops::{axpy, dot, norm2};

/// `η_k` below this multiple of `‖A‖_F` ends the run on an invariant subspace.
pub const INVARIANT_TOL: f64 = 1e-14;

/// Output of the symmetric Lanczos process.
#[derive(Debug, Clone)]
pub struct LanczosRun {
    /// `v_1, …, v_{k+1}` (only `v_1 … v_k` after an invariant-subspace stop).
    pub vectors: Vec<Vec<f64>>,
    /// `ω_1, …, ω_k`
    pub omega: Vec<f64>,
    /// `η_1, …, η_k`; a final zero marks an invariant subspace.
    pub eta: Vec<f64>,
    pub invariant: bool,
}

impl LanczosRun {
    pub fn steps(&self) -> usize {
        self.omega.len()
    }

    /// `T_k`, the leading `k × k` tridiagonal block.
    pub fn tridiagonal(&self, k: usize) -> DMatrix<f64> {
        tridiagonal(&self.omega[..k], &self.eta[..k.saturating_sub(1)])
    }
}

/// Symmetric tridiagonal matrix with diagonal `omega` and off-diagonal `eta`.
pub fn tridiagonal(omega: &[f64], eta: &[f64]) -> DMatrix<f64> {
    let k = omega.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = omega[i];
        if i + 1 < k {
            t[(i, i + 1)] = eta[i];
            t[(i + 1, i)] = eta[i];
        }
    }
    t
}

pub fn lanczos_run(a: &DenseMatrix, v: &[f64], steps: usize) -> Result<LanczosRun, SolverError> {
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(SolverError::Domain("Lanczos needs a symmetric matrix".into()));
    }
    if v.len() != a.nrows() {
        return Err(SolverError::Domain("start vector has the wrong length".into()));
    }
    let nv = norm2(v);
    if !(nv > 0.0) || !nv.is_finite() {
        return Err(SolverError::Domain("start vector must be non-zero".into()));
    }
    let scale = a.frobenius_norm();
    let mut run = LanczosRun {
        vectors: vec![v.iter().map(|x| x / nv).collect()],
        omega: Vec::new(),
        eta: Vec::new(),
        invariant: false,
    };
    let mut m = vec![0.0; v.len()];
    for k in 0..steps {
        a.matvec_into(&run.vectors[k], &mut m);
        if k > 0 {
            axpy(-run.eta[k - 1], &run.vectors[k - 1], &mut m);
        }
        let omega = dot(&run.vectors[k], &m);
        axpy(-omega, &run.vectors[k], &mut m);
        let eta = norm2(&m);
        if !eta.is_finite() {
            return Err(SolverError::NumericalFailure { iteration: k + 1, msg: "non-finite Lanczos vector".into() });
        }
        run.omega.push(omega);
        if eta <= INVARIANT_TOL * scale {
            run.eta.push(0.0);
            run.invariant = true;
            break;
        }
        run.eta.push(eta);
        run.vectors.push(m.iter().map(|x| x / eta).collect());
    }
    Ok(run)
}

/// Lanczos coefficients implied by CG step lengths and β's:
/// `ω_1 = 1/α_0`, `ω_k = 1/α_{k-1} + β_{k-2}/α_{k-2}`, `η_k = √β_{k-1}/α_{k-1}`.
///
/// Returns as many `ω` as there are α's and as many `η` as there are β's.
pub fn lanczos_from_cg(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let omega = (0..alpha.len())
        .map(|i| if i == 0 { 1.0 / alpha[0] } else { 1.0 / alpha[i] + beta[i - 1] / alpha[i - 1] })
        .collect();
    let eta = beta.iter().zip(alpha).map(|(b, a)| b.sqrt() / a).collect();
    (omega, eta)
}
