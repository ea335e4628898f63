use crate::matstore::ProblemInstance;

use super::observer::{Step, StepObserver, StepView};
use super::trace::{BreakdownKind, Control, ConvergenceTrace, Recorder, SolverError, SolverKind, Termination};
use super::vecops::{axpy, dot, norm2, sub, xpay};

/// Scale-free breakdown guard.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Bi-conjugate gradients with shadow system `Aᵀ y = b`, `y_0 = x_0`.
///
/// With `x_0 = 0` or symmetric `A` the shadow residual starts equal to
/// `r_0`, and for symmetric `A` the iterates coincide with CG.
pub fn bicg_run<O: StepObserver + ?Sized>(
    p: &ProblemInstance,
    max_it: usize,
    observer: &mut O,
) -> Result<ConvergenceTrace, SolverError> {
    let a = &p.a;
    let n = p.n();
    let a_norm = a.frobenius_norm();
    let mut x = p.x0.clone();
    let mut y = p.x0.clone();
    let mut r = sub(&p.b, &a.matvec(&x));
    let mut rt = sub(&p.b, &a.matvec_t(&x));
    let r0_norm = norm2(&r);
    let mut rec = Recorder::new(p, SolverKind::Bicg, r0_norm);
    rec.push(0, &x, r0_norm);

    let first = StepView { k: 0, x: &x, r: &r, rt: Some(&rt), y: Some(&y), step: None };
    if observer.observe(&first) == Control::Stop {
        return Ok(rec.finish(Termination::ObserverStop, x));
    }
    if r0_norm == 0.0 {
        return Ok(rec.finish(Termination::Converged, x));
    }

    let mut dir = r.clone();
    let mut q = rt.clone();
    let mut ap = vec![0.0; n];
    let mut atq = vec![0.0; n];
    let mut r_prev = vec![0.0; n];
    let mut rho = dot(&rt, &r);
    let mut termination = Termination::MaxIterations;
    for k in 0..max_it {
        if rho.abs() < BREAKDOWN_TOL * norm2(&rt) * norm2(&r) {
            return Err(SolverError::Breakdown {
                kind: BreakdownKind::Lanczos,
                iteration: k,
                trace: Box::new(rec.finish(Termination::Breakdown, x)),
            });
        }
        a.matvec_into(&dir, &mut ap);
        a.matvec_t_into(&q, &mut atq);
        let qap = dot(&q, &ap);
        if qap.is_nan() {
            return Err(SolverError::NumericalFailure { iteration: k, msg: "qᵀAp is NaN".into() });
        }
        if qap.abs() < BREAKDOWN_TOL * norm2(&dir) * norm2(&q) * a_norm {
            return Err(SolverError::Breakdown {
                kind: BreakdownKind::Serious,
                iteration: k,
                trace: Box::new(rec.finish(Termination::Breakdown, x)),
            });
        }
        let alpha = rho / qap;
        axpy(alpha, &dir, &mut x);
        axpy(alpha, &q, &mut y);
        r_prev.copy_from_slice(&r);
        axpy(-alpha, &ap, &mut r);
        axpy(-alpha, &atq, &mut rt);
        let rho_next = dot(&rt, &r);
        let res = norm2(&r);
        if !res.is_finite() || !rho_next.is_finite() {
            return Err(SolverError::NumericalFailure { iteration: k + 1, msg: "residual overflow".into() });
        }
        let beta = rho_next / rho;
        rec.set_coefficients(k, alpha, beta);
        rec.push(k + 1, &x, res);

        let step = Step { alpha, beta, rho, p: &dir, ap: &ap, r_prev: &r_prev };
        let ctl = observer.observe(&StepView { k: k + 1, x: &x, r: &r, rt: Some(&rt), y: Some(&y), step: Some(step) });
        if res == 0.0 {
            termination = Termination::Converged;
            break;
        }
        if ctl == Control::Stop {
            termination = Termination::ObserverStop;
            break;
        }
        xpay(&r, beta, &mut dir);
        xpay(&rt, beta, &mut q);
        rho = rho_next;
    }
    Ok(rec.finish(termination, x))
}
