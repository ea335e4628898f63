//! GMRES error estimator from the Hessenberg matrix, with `j = k − d`:
//!
//! `χ_j² / ‖r_0‖² = γ² ‖H̃⁻¹e_1‖² + ‖γ H_j⁻¹w + (e_j, H_j⁻¹e_1) u_j‖²`
//!
//! where `H_k = [H_j W; h_{j+1,j} e_1 e_jᵀ H̃]`, `w = W H̃⁻¹ e_1` and
//! `γ = h_{j+1,j} (e_j, H_j⁻¹e_1) / (1 − h_{j+1,j} (e_j, H_j⁻¹w))`. The vector
//! `u_k = δ_{k+1} t_k` with `t_k` the last column of `(H_kᵀH_k)⁻¹` and
//! `δ_{k+1} = h_{k+1,k}² / (1 + h_{k+1,k}² t_kk)`. This measures the distance
//! from the GMRES iterate `x_j` to the FOM iterate of step `k`; the modified
//! variant subtracts `‖r_0‖²‖s_k‖²`, `s_k = (e_k, H_k⁻¹e_1) u_k`, the part
//! that is the FOM/GMRES gap at step `k` itself.

use nalgebra::{DMatrix, DVector};

use crate::krylov::{gmres_run, Control, ConvergenceTrace, GmresObserver, GmresView, Hessenberg};
use crate::matstore::ProblemInstance;

use super::{check_delay, EstimateError, EstimateSeries, EstimatorVariant, PrecisionTrigger, TailMode};

/// Guard on `|1 − h_{j+1,j}(e_j, H_j⁻¹w)|`.
pub const GAMMA_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerSample {
    pub k: usize,
    pub s_norm: f64,
    /// Predicate value at this iterate.
    pub raised: bool,
    /// Raised at this iterate or any earlier one.
    pub latched: bool,
}

#[derive(Debug, Clone)]
pub struct GmresSeries {
    pub original: EstimateSeries,
    /// Signed values keep `raw_original − raw_modified = ‖r_0‖²‖s_k‖²` exact.
    pub modified: EstimateSeries,
    /// `‖s_k‖` for `k = 1, 2, …`, with the trigger state.
    pub trigger: Vec<TriggerSample>,
}

impl GmresSeries {
    pub fn s_norm(&self, k: usize) -> Option<f64> {
        self.trigger.iter().find(|t| t.k == k).map(|t| t.s_norm)
    }

    pub fn first_trigger(&self) -> Option<usize> {
        self.trigger.iter().find(|t| t.raised).map(|t| t.k)
    }
}

fn e1(k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(k);
    v[0] = 1.0;
    v
}

fn solve(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.lu().solve(rhs).filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Per-step quantities kept for later estimates.
#[derive(Debug, Clone)]
struct StepData {
    /// `H_k⁻¹ e_1`
    y: DVector<f64>,
    u: DVector<f64>,
    s_sq: f64,
}

fn step_data(h: &DMatrix<f64>, sub: f64) -> Option<StepData> {
    let k = h.nrows();
    let y = solve(h.clone(), &e1(k))?;
    // (HᵀH)⁻¹ e_k = H⁻¹ H⁻ᵀ e_k
    let mut ek = DVector::zeros(k);
    ek[k - 1] = 1.0;
    let a = solve(h.transpose(), &ek)?;
    let t = solve(h.clone(), &a)?;
    let h2 = sub * sub;
    let delta = h2 / (1.0 + h2 * t[k - 1]);
    let u = t * delta;
    let s_sq = (y[k - 1] * y[k - 1]) * u.norm_squared();
    Some(StepData { y, u, s_sq })
}

#[derive(Debug)]
pub struct GmresEstimator {
    d: usize,
    tail: TailMode,
    trigger_state: PrecisionTrigger,
    r0_sq: f64,
    /// Indexed by `k`; `None` where `H_k` was singular.
    steps: Vec<Option<StepData>>,
    last_hess: Option<Hessenberg>,
    last_k: usize,
    next_emit: usize,
    out: GmresSeries,
}

impl GmresEstimator {
    pub fn new(d: usize, tail: TailMode) -> Result<Self, EstimateError> {
        Self::with_trigger(d, tail, PrecisionTrigger::default())
    }

    pub fn with_trigger(d: usize, tail: TailMode, trigger: PrecisionTrigger) -> Result<Self, EstimateError> {
        check_delay(d)?;
        Ok(Self {
            d,
            tail,
            trigger_state: trigger,
            r0_sq: 0.0,
            steps: vec![None],
            last_hess: None,
            last_k: 0,
            next_emit: 0,
            out: GmresSeries {
                original: EstimateSeries::new(EstimatorVariant::GmresOriginal, d),
                modified: EstimateSeries::new(EstimatorVariant::GmresModified, d),
                trigger: Vec::new(),
            },
        })
    }

    pub fn series(&self) -> &GmresSeries {
        &self.out
    }

    /// Squared estimate (scaled by `‖r_0‖²`) for iterate `j` from `H_k`.
    fn original(&self, hess: &Hessenberg, j: usize, k: usize) -> Option<f64> {
        let yk = &self.steps[k].as_ref()?.y;
        if j == 0 {
            return Some(self.r0_sq * yk.norm_squared());
        }
        let hk = hess.square(k);
        let hj = hk.view((0, 0), (j, j)).into_owned();
        let w_blk = hk.view((0, j), (j, k - j)).into_owned();
        let ht = hk.view((j, j), (k - j, k - j)).into_owned();
        let sub = hess.subdiag(j - 1);
        let a = solve(ht, &e1(k - j))?;
        let w = w_blk * &a;
        let q = solve(hj, &w)?;
        let sj = self.steps[j].as_ref()?;
        let gj = sj.y[j - 1];
        let den = 1.0 - sub * q[j - 1];
        if den.abs() < GAMMA_GUARD {
            return None;
        }
        let gamma = sub * gj / den;
        let v = q * gamma + &sj.u * gj;
        Some(self.r0_sq * (gamma * gamma * a.norm_squared() + v.norm_squared()))
    }

    fn emit(&mut self, hess: &Hessenberg, j: usize, k: usize, truncated: bool) {
        let s_sq = self.steps[k].as_ref().map(|s| s.s_sq);
        match (self.original(hess, j, k), s_sq) {
            (Some(orig), Some(s_sq)) => {
                self.out.original.push_abs(j, orig, truncated);
                self.out.modified.push_abs(j, orig - self.r0_sq * s_sq, truncated);
            }
            _ => {
                self.out.original.withheld.push(j);
                self.out.modified.withheld.push(j);
            }
        }
        self.next_emit = j + 1;
    }

    pub fn finish(mut self) -> GmresSeries {
        if self.tail == TailMode::Truncate {
            if let Some(h) = self.last_hess.take() {
                let k = self.last_k;
                for j in self.next_emit..k {
                    self.emit(&h, j, k, true);
                }
            }
        }
        self.out
    }
}

impl GmresObserver for GmresEstimator {
    fn observe(&mut self, v: &GmresView<'_>) -> Control {
        let k = v.k;
        self.last_k = k;
        if k == 0 {
            self.r0_sq = v.r0_norm * v.r0_norm;
            return Control::Continue;
        }
        let data = step_data(&v.hess.square(k), v.hess.subdiag(k - 1));
        if let Some(s) = &data {
            let s_norm = s.s_sq.sqrt();
            let raised = self.trigger_state.update(k, s_norm);
            let latched = self.trigger_state.latched_at().is_some();
            self.out.trigger.push(TriggerSample { k, s_norm, raised, latched });
        }
        self.steps.push(data);
        if k >= self.d {
            self.emit(v.hess, k - self.d, k, false);
        }
        if self.tail == TailMode::Truncate {
            self.last_hess = Some(v.hess.clone());
        }
        Control::Continue
    }
}

/// Runs GMRES with the estimator attached.
pub fn gmres_estimate_run(
    p: &ProblemInstance,
    max_it: usize,
    d: usize,
    tail: TailMode,
) -> Result<(ConvergenceTrace, GmresSeries), EstimateError> {
    let mut est = GmresEstimator::new(d, tail)?;
    let trace = gmres_run(p, max_it, &mut est)?;
    Ok((trace, est.finish()))
}
