use crate::matstore::DenseMatrix;

use super::vecops::{dot, norm2, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cg,
    Bicg,
    Gmres,
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cg" => Ok(Self::Cg),
            "bicg" => Ok(Self::Bicg),
            "gmres" => Ok(Self::Gmres),
            other => Err(format!("unknown solver `{other}`")),
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cg => "cg",
            Self::Bicg => "bicg",
            Self::Gmres => "gmres",
        })
    }
}

/// What an observer asks of the solver after seeing an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Exact solution reached (zero residual or happy breakdown).
    Converged,
    MaxIterations,
    ObserverStop,
    /// Only appears on the partial trace carried by a breakdown error.
    Breakdown,
}

/// One row of a convergence trace, describing the iterate `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `‖r_k‖` as carried by the solver's recurrence.
    pub res_norm: f64,
    pub x_norm: f64,
    /// `|x_kᵀ A x_k|^½`, the A-measure of the iterate.
    pub x_anorm: f64,
    /// Step length computed from `r_k` (absent on the final record and for GMRES).
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `‖x − x_k‖` when the oracle solution is known.
    pub true_err_norm: Option<f64>,
    /// `|ε_kᵀ A ε_k|` when the oracle solution is known.
    pub true_err_anorm_sq: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub solver: SolverKind,
    pub label: String,
    pub n: usize,
    pub b_norm: f64,
    pub r0_norm: f64,
    /// `‖x‖` and `‖x‖_A` of the oracle solution, when known.
    pub x_true_norm: Option<f64>,
    pub x_true_anorm: Option<f64>,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub x_final: Vec<f64>,
}

impl ConvergenceTrace {
    /// Number of completed iterations (index of the last iterate).
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn has_oracle(&self) -> bool {
        self.x_true_norm.is_some()
    }

    pub fn record(&self, k: usize) -> Option<&IterationRecord> {
        self.records.get(k).filter(|r| r.k == k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKind {
    /// `pᵀAp ≤ 0` in CG.
    Indefinite,
    /// `qᵀAp ≈ 0` in Bi-CG.
    Serious,
    /// `r̃ᵀr ≈ 0` in Bi-CG.
    Lanczos,
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{kind:?} breakdown at iteration {iteration}")]
    Breakdown {
        kind: BreakdownKind,
        iteration: usize,
        /// Iterations completed before the breakdown.
        trace: Box<ConvergenceTrace>,
    },
    #[error("numerical failure at iteration {iteration}: {msg}")]
    NumericalFailure { iteration: usize, msg: String },
}

impl SolverError {
    /// Trace up to the failure, when one was recorded.
    pub fn partial_trace(&self) -> Option<&ConvergenceTrace> {
        match self {
            Self::Breakdown { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Builds the per-iteration records, including oracle errors.
pub(crate) struct Recorder<'a> {
    a: &'a DenseMatrix,
    x_true: Option<&'a [f64]>,
    solver: SolverKind,
    label: String,
    b_norm: f64,
    r0_norm: f64,
    records: Vec<IterationRecord>,
    scratch: Vec<f64>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(problem: &'a crate::matstore::ProblemInstance, solver: SolverKind, r0_norm: f64) -> Self {
        Self {
            a: &problem.a,
            x_true: problem.x_true.as_deref(),
            solver,
            label: problem.label.clone(),
            b_norm: norm2(&problem.b),
            r0_norm,
            records: Vec::new(),
            scratch: vec![0.0; problem.n()],
        }
    }

    fn anorm_sq(&mut self, v: &[f64]) -> f64 {
        self.a.matvec_into(v, &mut self.scratch);
        dot(v, &self.scratch).abs()
    }

    pub(crate) fn push(&mut self, k: usize, x: &[f64], res_norm: f64) {
        let x_anorm = self.anorm_sq(x).sqrt();
        let (true_err_norm, true_err_anorm_sq) = match self.x_true {
            Some(xt) => {
                let e = sub(xt, x);
                (Some(norm2(&e)), Some(self.anorm_sq(&e)))
            }
            None => (None, None),
        };
        self.records.push(IterationRecord {
            k,
            res_norm,
            x_norm: norm2(x),
            x_anorm,
            alpha: None,
            beta: None,
            true_err_norm,
            true_err_anorm_sq,
        });
    }

    /// Attaches the step coefficients computed from iterate `k`.
    pub(crate) fn set_coefficients(&mut self, k: usize, alpha: f64, beta: f64) {
        if let Some(r) = self.records.get_mut(k) {
            r.alpha = Some(alpha);
            r.beta = Some(beta);
        }
    }

    pub(crate) fn finish(self, termination: Termination, x_final: Vec<f64>) -> ConvergenceTrace {
        let (x_true_norm, x_true_anorm) = match self.x_true {
            Some(xt) => {
                let mut ax = vec![0.0; xt.len()];
                self.a.matvec_into(xt, &mut ax);
                (Some(norm2(xt)), Some(dot(xt, &ax).abs().sqrt()))
            }
            None => (None, None),
        };
        ConvergenceTrace {
            solver: self.solver,
            label: self.label,
            n: self.a.nrows(),
            b_norm: self.b_norm,
            r0_norm: self.r0_norm,
            x_true_norm,
            x_true_anorm,
            records: self.records,
            termination,
            x_final,
        }
    }
}
