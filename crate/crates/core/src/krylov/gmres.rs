use nalgebra::DMatrix;

use crate::matstore::ProblemInstance;

use super::observer::{GmresObserver, GmresView};
use super::trace::{Control, ConvergenceTrace, Recorder, SolverError, SolverKind, Termination};
use super::vecops::{axpy, dot, norm2, sub};

/// Relative size of `h_{k+1,k}` (against `‖A‖_F`) treated as a happy breakdown.
pub const HAPPY_TOL: f64 = 1e-14;

/// Upper Hessenberg matrix grown one column per Arnoldi step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hessenberg {
    // column j holds rows 0..=j+1
    cols: Vec<Vec<f64>>,
}

impl Hessenberg {
    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Entry `(i, j)`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols.get(j).and_then(|c| c.get(i)).copied().unwrap_or(0.0)
    }

    /// `h_{j+2, j+1}` in one-based terms: the subdiagonal below column `j`.
    pub fn subdiag(&self, j: usize) -> f64 {
        self.get(j + 1, j)
    }

    /// Leading `k × k` block `H_k`.
    pub fn square(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k, k, |i, j| self.get(i, j))
    }

    /// Leading `(k+1) × k` block.
    pub fn extended(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k + 1, k, |i, j| self.get(i, j))
    }

    fn push(&mut self, col: Vec<f64>) {
        debug_assert_eq!(col.len(), self.cols.len() + 2);
        self.cols.push(col);
    }
}

fn numerical(iteration: usize, msg: &str) -> SolverError {
    SolverError::NumericalFailure { iteration, msg: msg.into() }
}

/// Full GMRES: modified Gram–Schmidt Arnoldi, Givens least squares, and
/// the iterate materialized at every step.
pub fn gmres_run<O: GmresObserver + ?Sized>(
    p: &ProblemInstance,
    max_it: usize,
    observer: &mut O,
) -> Result<ConvergenceTrace, SolverError> {
    gmres_run_with_basis(p, max_it, observer).map(|(t, _)| t)
}

/// As [`gmres_run`], also returning the Arnoldi basis `v_1, v_2, …` and the Hessenberg.
pub fn gmres_run_with_basis<O: GmresObserver + ?Sized>(
    p: &ProblemInstance,
    max_it: usize,
    observer: &mut O,
) -> Result<(ConvergenceTrace, (Vec<Vec<f64>>, Hessenberg)), SolverError> {
    let a = &p.a;
    let n = p.n();
    let a_norm = a.frobenius_norm();
    let r0 = sub(&p.b, &a.matvec(&p.x0));
    let beta = norm2(&r0);
    let mut rec = Recorder::new(p, SolverKind::Gmres, beta);
    rec.push(0, &p.x0, beta);
    let mut hess = Hessenberg::default();

    let first = GmresView { k: 0, x: &p.x0, res_norm: beta, r0_norm: beta, hess: &hess, happy_breakdown: beta == 0.0 };
    let ctl = observer.observe(&first);
    if beta == 0.0 {
        return Ok((rec.finish(Termination::Converged, p.x0.clone()), (Vec::new(), hess)));
    }
    if ctl == Control::Stop {
        return Ok((rec.finish(Termination::ObserverStop, p.x0.clone()), (Vec::new(), hess)));
    }

    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut rcols: Vec<Vec<f64>> = Vec::new();
    let mut g = vec![beta];
    let mut x = p.x0.clone();
    let mut w = vec![0.0; n];
    let mut termination = Termination::MaxIterations;

    for k in 1..=max_it {
        a.matvec_into(&basis[k - 1], &mut w);
        let mut col = vec![0.0; k + 1];
        for (j, v) in basis.iter().enumerate() {
            let h = dot(v, &w);
            col[j] = h;
            axpy(-h, v, &mut w);
        }
        let h_next = norm2(&w);
        if !h_next.is_finite() || col.iter().any(|h| !h.is_finite()) {
            return Err(numerical(k, "NaN in Arnoldi basis"));
        }
        let happy = h_next <= HAPPY_TOL * a_norm || k >= n;
        if !happy {
            basis.push(w.iter().map(|v| v / h_next).collect());
            col[k] = h_next;
        }
        hess.push(col.clone());

        let mut rc = col;
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (u, v) = (rc[i], rc[i + 1]);
            rc[i] = c * u + s * v;
            rc[i + 1] = -s * u + c * v;
        }
        let (u, v) = (rc[k - 1], rc[k]);
        let rr = u.hypot(v);
        if rr == 0.0 {
            return Err(numerical(k, "singular Hessenberg"));
        }
        let (c, s) = (u / rr, v / rr);
        rot.push((c, s));
        rc[k - 1] = rr;
        rc.truncate(k);
        rcols.push(rc);
        let gk = g[k - 1];
        g[k - 1] = c * gk;
        g.push(-s * gk);
        let res_norm = g[k].abs();

        // back substitution R z = g
        let mut z = g[..k].to_vec();
        for i in (0..k).rev() {
            let mut acc = z[i];
            for j in i + 1..k {
                acc -= rcols[j][i] * z[j];
            }
            z[i] = acc / rcols[i][i];
        }
        x.copy_from_slice(&p.x0);
        for (zj, v) in z.iter().zip(&basis) {
            axpy(*zj, v, &mut x);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(numerical(k, "non-finite iterate"));
        }
        rec.push(k, &x, res_norm);

        let view = GmresView { k, x: &x, res_norm, r0_norm: beta, hess: &hess, happy_breakdown: happy };
        let ctl = observer.observe(&view);
        if happy {
            termination = Termination::Converged;
            break;
        }
        if ctl == Control::Stop {
            termination = Termination::ObserverStop;
            break;
        }
    }
    Ok((rec.finish(termination, x), (basis, hess)))
}
