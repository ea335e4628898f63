use crate::matstore::ProblemInstance;

use super::observer::{Step, StepObserver, StepView};
use super::trace::{BreakdownKind, Control, ConvergenceTrace, Recorder, SolverError, SolverKind, Termination};
use super::vecops::{axpy, dot, sub, xpay};

/// Relative symmetry tolerance accepted by [`cg_run`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Conjugate gradients. The observer sees `x_0` and then every new iterate.
pub fn cg_run<O: StepObserver + ?Sized>(
    p: &ProblemInstance,
    max_it: usize,
    observer: &mut O,
) -> Result<ConvergenceTrace, SolverError> {
    let a = &p.a;
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(SolverError::Domain(format!(
            "CG needs a symmetric matrix, ‖A−Aᵀ‖_F = {:.3e}",
            a.symmetry_defect()
        )));
    }
    let n = p.n();
    let mut x = p.x0.clone();
    let mut r = sub(&p.b, &a.matvec(&x));
    let mut rho = dot(&r, &r);
    let mut rec = Recorder::new(p, SolverKind::Cg, rho.sqrt());
    rec.push(0, &x, rho.sqrt());

    let first = StepView { k: 0, x: &x, r: &r, rt: None, y: None, step: None };
    if observer.observe(&first) == Control::Stop {
        return Ok(rec.finish(Termination::ObserverStop, x));
    }
    if rho == 0.0 {
        return Ok(rec.finish(Termination::Converged, x));
    }

    let mut dir = r.clone();
    let mut ap = vec![0.0; n];
    let mut r_prev = vec![0.0; n];
    let mut termination = Termination::MaxIterations;
    for k in 0..max_it {
        a.matvec_into(&dir, &mut ap);
        let pap = dot(&dir, &ap);
        if pap.is_nan() {
            return Err(SolverError::NumericalFailure { iteration: k, msg: "pᵀAp is NaN".into() });
        }
        if pap <= 0.0 {
            return Err(SolverError::Breakdown {
                kind: BreakdownKind::Indefinite,
                iteration: k,
                trace: Box::new(rec.finish(Termination::Breakdown, x)),
            });
        }
        let alpha = rho / pap;
        axpy(alpha, &dir, &mut x);
        r_prev.copy_from_slice(&r);
        axpy(-alpha, &ap, &mut r);
        let rho_next = dot(&r, &r);
        if !rho_next.is_finite() {
            return Err(SolverError::NumericalFailure { iteration: k + 1, msg: "residual overflow".into() });
        }
        let beta = rho_next / rho;
        rec.set_coefficients(k, alpha, beta);
        rec.push(k + 1, &x, rho_next.sqrt());

        let step = Step { alpha, beta, rho, p: &dir, ap: &ap, r_prev: &r_prev };
        let ctl = observer.observe(&StepView { k: k + 1, x: &x, r: &r, rt: None, y: None, step: Some(step) });
        if rho_next == 0.0 {
            termination = Termination::Converged;
            break;
        }
        if ctl == Control::Stop {
            termination = Termination::ObserverStop;
            break;
        }
        xpay(&r, beta, &mut dir);
        rho = rho_next;
    }
    Ok(rec.finish(termination, x))
}
