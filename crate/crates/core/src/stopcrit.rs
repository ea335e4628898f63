//! Stopping policies and the iteration accounting that compares them.
//!
//! A policy is checked after each completed iteration. Estimator policies
//! see the estimate for iterate `k − d` at iteration `k`, so they halt no
//! earlier than `d` unless the solver terminates exactly before that.

use crate::estimate::{
    BicgqlEstimator, CgqlEstimator, EstimateError, EstimateSeries, EstimatorVariant, GmresEstimator, Measure, TailMode,
};
use crate::krylov::{
    bicg_run, cg_run, gmres_run, Control, ConvergenceTrace, GmresObserver, GmresView, SolverError, SolverKind,
    StepObserver, StepView, Termination,
};
use crate::matstore::ProblemInstance;

#[derive(Debug, thiserror::Error)]
pub enum StopError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

impl From<SolverError> for StopError {
    fn from(e: SolverError) -> Self {
        StopError::Estimate(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    RelativeResidual,
    EstimatorRelativeError,
    OracleRelativeError,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RelativeResidual => "relative_residual",
            Self::EstimatorRelativeError => "estimator_relative_error",
            Self::OracleRelativeError => "oracle_relative_error",
        })
    }
}

/// Which `‖x‖` divides the error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XNorm {
    /// `‖x_k‖` of the iterate being estimated.
    #[default]
    Iterate,
    /// The direct-solve solution, for validation runs.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingPolicy {
    pub kind: PolicyKind,
    pub tol: f64,
    pub variant: Option<EstimatorVariant>,
    pub x_norm: XNorm,
}

impl StoppingPolicy {
    pub fn residual(tol: f64) -> Self {
        Self { kind: PolicyKind::RelativeResidual, tol, variant: None, x_norm: XNorm::Iterate }
    }

    pub fn estimator(variant: EstimatorVariant, tol: f64) -> Self {
        Self { kind: PolicyKind::EstimatorRelativeError, tol, variant: Some(variant), x_norm: XNorm::Iterate }
    }

    pub fn oracle(tol: f64) -> Self {
        Self { kind: PolicyKind::OracleRelativeError, tol, variant: None, x_norm: XNorm::Oracle }
    }

    pub fn with_x_norm(mut self, x_norm: XNorm) -> Self {
        self.x_norm = x_norm;
        self
    }

    pub fn validate(&self, solver: SolverKind) -> Result<(), StopError> {
        check_tol(self.tol)?;
        match (self.kind, self.variant) {
            (PolicyKind::EstimatorRelativeError, None) => {
                Err(StopError::Domain("estimator policy needs an estimator variant".into()))
            }
            (PolicyKind::EstimatorRelativeError, Some(v)) if !v.supports(solver) => {
                Err(StopError::Domain(format!("estimator {v} cannot follow {solver}")))
            }
            (
                PolicyKind::EstimatorRelativeError,
                Some(v @ (EstimatorVariant::CgqlRadau | EstimatorVariant::CgqlRadauLower)),
            ) => Err(StopError::Domain(format!("{v} needs spectral bounds and is not available as a stopping policy"))),
            (PolicyKind::EstimatorRelativeError, Some(_)) | (_, None) => Ok(()),
            (_, Some(v)) => Err(StopError::Domain(format!("{} policy takes no estimator, got {v}", self.kind))),
        }
    }
}

fn check_tol(tol: f64) -> Result<(), StopError> {
    if tol > 0.0 && tol <= 1.0 {
        Ok(())
    } else {
        Err(StopError::Domain(format!("tolerance {tol} outside (0, 1]")))
    }
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub trace: ConvergenceTrace,
    /// Iteration at which the solver halted; `max_it` when never satisfied.
    pub stop: usize,
    pub satisfied: bool,
    /// Series of the policy's estimator, if any.
    pub estimates: Option<EstimateSeries>,
    /// GMRES only: iteration at which the precision trigger latched and the
    /// policy switched to the residual test.
    pub fallback_at: Option<usize>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Shared decision logic for one run.
struct Judge<'a> {
    p: &'a ProblemInstance,
    policy: StoppingPolicy,
    measure: Measure,
    b_norm: f64,
    /// Oracle `‖x‖` in the policy's measure, when used.
    x_ref: Option<f64>,
    /// Per-iterate `‖x_k‖` in the policy's measure.
    x_norms: Vec<f64>,
    emitted: usize,
    hit: Option<usize>,
}

impl<'a> Judge<'a> {
    fn new(p: &'a ProblemInstance, policy: StoppingPolicy) -> Result<Self, StopError> {
        let measure = policy.variant.map_or(Measure::L2, |v| v.measure());
        let needs_oracle = policy.kind == PolicyKind::OracleRelativeError || policy.x_norm == XNorm::Oracle;
        let x_ref = match (&p.x_true, needs_oracle) {
            (Some(x), true) => Some(match measure {
                Measure::L2 => norm(x),
                Measure::ANorm => dot(x, &p.a.matvec(x)).abs().sqrt(),
            }),
            (None, true) => return Err(StopError::Domain("policy needs the true solution".into())),
            (_, false) => None,
        };
        Ok(Self { p, policy, measure, b_norm: norm(&p.b), x_ref, x_norms: Vec::new(), emitted: 0, hit: None })
    }

    fn x_measure(&self, x: &[f64]) -> f64 {
        match self.measure {
            Measure::L2 => norm(x),
            Measure::ANorm => dot(x, &self.p.a.matvec(x)).abs().sqrt(),
        }
    }

    fn residual_ok(&self, res_norm: f64) -> bool {
        res_norm <= self.policy.tol * self.b_norm
    }

    fn oracle_ok(&self, x: &[f64]) -> bool {
        let xt = self.p.x_true.as_deref().expect("checked in Judge::new");
        let e: Vec<f64> = xt.iter().zip(x).map(|(a, b)| a - b).collect();
        norm(&e) <= self.policy.tol * self.x_ref.expect("checked in Judge::new")
    }

    /// Checks estimates emitted since the last call.
    fn estimates_ok(&mut self, series: &EstimateSeries) -> bool {
        let fresh = &series.estimates[self.emitted..];
        self.emitted = series.estimates.len();
        fresh.iter().any(|e| {
            let xn = self.x_ref.unwrap_or_else(|| self.x_norms[e.k]);
            e.chi() <= self.policy.tol * xn
        })
    }

    fn decide(&mut self, k: usize, ok: bool) -> Control {
        if ok {
            self.hit = Some(k);
            Control::Stop
        } else {
            Control::Continue
        }
    }
}

enum StepEst {
    Cgql(Box<CgqlEstimator>),
    Bicgql(BicgqlEstimator),
}

struct StepPolicy<'a> {
    judge: Judge<'a>,
    est: Option<StepEst>,
}

impl StepObserver for StepPolicy<'_> {
    fn observe(&mut self, v: &StepView<'_>) -> Control {
        let j = &mut self.judge;
        match j.policy.kind {
            PolicyKind::RelativeResidual => {
                let ok = j.residual_ok(norm(v.r));
                j.decide(v.k, ok)
            }
            PolicyKind::OracleRelativeError => {
                let ok = j.oracle_ok(v.x);
                j.decide(v.k, ok)
            }
            PolicyKind::EstimatorRelativeError => {
                if j.x_ref.is_none() {
                    let xn = j.x_measure(v.x);
                    j.x_norms.push(xn);
                }
                let (ctl, series) = match self.est.as_mut().expect("estimator policy") {
                    StepEst::Cgql(e) => (e.observe(v), &e.series().gauss),
                    StepEst::Bicgql(e) => {
                        let ctl = e.observe(v);
                        let s = e.series();
                        (ctl, if j.measure == Measure::ANorm { &s.anorm } else { &s.l2 })
                    }
                };
                if ctl == Control::Stop {
                    return Control::Stop;
                }
                let ok = j.estimates_ok(series);
                j.decide(v.k, ok)
            }
        }
    }
}

struct GmresPolicy<'a> {
    judge: Judge<'a>,
    est: Option<GmresEstimator>,
    fallback_at: Option<usize>,
}

impl GmresObserver for GmresPolicy<'_> {
    fn observe(&mut self, v: &GmresView<'_>) -> Control {
        let j = &mut self.judge;
        match j.policy.kind {
            PolicyKind::RelativeResidual => {
                let ok = j.residual_ok(v.res_norm);
                j.decide(v.k, ok)
            }
            PolicyKind::OracleRelativeError => {
                let ok = j.oracle_ok(v.x);
                j.decide(v.k, ok)
            }
            PolicyKind::EstimatorRelativeError => {
                if j.x_ref.is_none() {
                    let xn = j.x_measure(v.x);
                    j.x_norms.push(xn);
                }
                let est = self.est.as_mut().expect("estimator policy");
                est.observe(v);
                let s = est.series();
                if self.fallback_at.is_none() && s.trigger.last().is_some_and(|t| t.latched) {
                    self.fallback_at = Some(v.k);
                }
                let ok = if self.fallback_at.is_some() {
                    j.residual_ok(v.res_norm)
                } else {
                    let series = match j.policy.variant {
                        Some(EstimatorVariant::GmresModified) => &s.modified,
                        _ => &s.original,
                    };
                    j.estimates_ok(series)
                };
                j.decide(v.k, ok)
            }
        }
    }
}

/// Runs `solver` until `policy` is met or `max_it` iterations pass.
pub fn run_with_policy(
    p: &ProblemInstance,
    solver: SolverKind,
    policy: &StoppingPolicy,
    d: usize,
    max_it: usize,
) -> Result<PolicyRun, StopError> {
    policy.validate(solver)?;
    let judge = Judge::new(p, *policy)?;
    let estimator = policy.variant.filter(|_| policy.kind == PolicyKind::EstimatorRelativeError);
    let (trace, hit, estimates, fallback_at) = match solver {
        SolverKind::Cg | SolverKind::Bicg => {
            let est = match estimator {
                Some(EstimatorVariant::CgqlGauss) => {
                    Some(StepEst::Cgql(Box::new(CgqlEstimator::new(d, None, TailMode::Drop)?)))
                }
                Some(_) => Some(StepEst::Bicgql(BicgqlEstimator::new(d, TailMode::Drop)?)),
                None => None,
            };
            let mut obs = StepPolicy { judge, est };
            let trace =
                if solver == SolverKind::Cg { cg_run(p, max_it, &mut obs)? } else { bicg_run(p, max_it, &mut obs)? };
            let estimates = match obs.est {
                Some(StepEst::Cgql(e)) => Some(e.finish()?.gauss),
                Some(StepEst::Bicgql(e)) => {
                    let s = e.finish();
                    Some(if obs.judge.measure == Measure::ANorm { s.anorm } else { s.l2 })
                }
                None => None,
            };
            (trace, obs.judge.hit, estimates, None)
        }
        SolverKind::Gmres => {
            let est = estimator.map(|_| GmresEstimator::new(d, TailMode::Drop)).transpose()?;
            let mut obs = GmresPolicy { judge, est, fallback_at: None };
            let trace = gmres_run(p, max_it, &mut obs)?;
            let estimates = obs.est.map(|e| {
                let s = e.finish();
                if policy.variant == Some(EstimatorVariant::GmresModified) {
                    s.modified
                } else {
                    s.original
                }
            });
            (trace, obs.judge.hit, estimates, obs.fallback_at)
        }
    };
    let exact = trace.termination == Termination::Converged;
    let (stop, satisfied) = match hit {
        Some(k) => (k, true),
        None if exact => (trace.iterations(), true),
        None => (max_it, false),
    };
    Ok(PolicyRun { trace, stop, satisfied, estimates, fallback_at })
}

/// First-hit iterations of the three signals on one trace. `None` marks a
/// signal that never reached the tolerance; the losses are then undefined.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct StopAccounting {
    pub tol: f64,
    pub n: usize,
    pub i_res: Option<usize>,
    pub i_est: Option<usize>,
    pub i_true: Option<usize>,
    /// Iterations the residual test stops too early.
    pub accuracy_loss: Option<usize>,
    /// Iterations the residual test runs on after the error is small enough.
    pub computation_loss: Option<usize>,
    /// `|i_res − i_est| / n`
    pub delta_rel: Option<f64>,
}

impl StopAccounting {
    pub fn losses_defined(&self) -> bool {
        self.accuracy_loss.is_some()
    }
}

/// Accounts residual, estimator and oracle stopping on a finished trace.
///
/// `estimates` may be any estimator series recorded alongside the trace;
/// its values are divided by `‖x_k‖` in the estimator's measure.
pub fn stop_accounting(
    trace: &ConvergenceTrace,
    estimates: Option<&EstimateSeries>,
    tol: f64,
) -> Result<StopAccounting, StopError> {
    check_tol(tol)?;
    let x_norm = trace.x_true_norm.ok_or_else(|| StopError::Domain("accounting needs oracle errors".into()))?;
    let i_res = trace.records.iter().find(|r| r.res_norm <= tol * trace.b_norm).map(|r| r.k);
    let i_true = trace.records.iter().find(|r| r.true_err_norm.is_some_and(|e| e <= tol * x_norm)).map(|r| r.k);
    let i_est = estimates.and_then(|s| {
        s.estimates
            .iter()
            .find(|e| {
                let r = &trace.records[e.k];
                let xn = match s.variant.measure() {
                    Measure::L2 => r.x_norm,
                    Measure::ANorm => r.x_anorm,
                };
                e.chi() <= tol * xn
            })
            .map(|e| e.k)
    });
    let (accuracy_loss, computation_loss) = match (i_res, i_true) {
        (Some(r), Some(t)) => (Some(t.saturating_sub(r)), Some(r.saturating_sub(t))),
        _ => (None, None),
    };
    let delta_rel = i_res.zip(i_est).map(|(r, e)| r.abs_diff(e) as f64 / trace.n as f64);
    Ok(StopAccounting { tol, n: trace.n, i_res, i_est, i_true, accuracy_loss, computation_loss, delta_rel })
}
