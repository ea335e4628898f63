//! BiCGQL: delayed estimates of the A-measure `|ε_mᵀAε_m|` and of `‖ε_m‖²`
//! from a sliding window of Bi-CG step lengths and search directions.
//!
//! With `S = Σ_{j=m}^{m+d-1} α_j p_j ≈ x_{m+d} − x_m`:
//!
//! * A-measure: `−α_{m-1} r_{m-1}ᵀp_{m-1} + r_mᵀ(α_{m-1}p_{m-1} + S) + α_{m-1}² p_{m-1}ᵀAp_{m-1}`
//!   (just `r_0ᵀS` for `m = 0`);
//! * l2: `‖S‖²`.
//!
//! Each update is a fixed number of length-`n` vector operations per window
//! entry, so the cost per iteration is linear in `n`.

use std::collections::VecDeque;

use crate::krylov::{bicg_run, cg_run, Control, ConvergenceTrace, SolverKind, StepObserver, StepView};
use crate::matstore::ProblemInstance;

use super::scalar::{axpy, dot, lift};
use super::{check_delay, EstimateError, EstimateSeries, EstimatorVariant, Scalar, TailMode};

#[derive(Debug, Clone)]
pub struct BicgqlSeries {
    pub anorm: EstimateSeries,
    pub l2: EstimateSeries,
}

#[derive(Debug, Clone)]
struct Entry<T> {
    alpha: T,
    p: Vec<T>,
    r: Vec<T>,
    /// `p_jᵀ A p_j`
    pap: T,
    /// `r_jᵀ p_j`
    rp: T,
}

#[derive(Debug, Clone)]
pub struct BicgqlEstimator<T: Scalar = f64> {
    d: usize,
    tail: TailMode,
    window: VecDeque<Entry<T>>,
    /// Iteration index of `window[0]`.
    first: usize,
    last_k: usize,
    next_emit: usize,
    out: BicgqlSeries,
}

impl<T: Scalar> BicgqlEstimator<T> {
    pub fn new(d: usize, tail: TailMode) -> Result<Self, EstimateError> {
        check_delay(d)?;
        Ok(Self {
            d,
            tail,
            window: VecDeque::with_capacity(d + 2),
            first: 0,
            last_k: 0,
            next_emit: 0,
            out: BicgqlSeries {
                anorm: EstimateSeries::new(EstimatorVariant::BicgqlAnorm, d),
                l2: EstimateSeries::new(EstimatorVariant::BicgqlL2, d),
            },
        })
    }

    pub fn series(&self) -> &BicgqlSeries {
        &self.out
    }

    /// Appends step `j` (`α_j`, `p_j`, `A p_j`, `r_j`).
    pub fn push_step(&mut self, alpha: T, p: Vec<T>, ap: &[T], r: Vec<T>) {
        let pap = dot(&p, ap);
        let rp = dot(&r, &p);
        self.window.push_back(Entry { alpha, p, r, pap, rp });
    }

    fn entry(&self, j: usize) -> &Entry<T> {
        &self.window[j - self.first]
    }

    /// Raw `(A-measure, l2)` estimates for iterate `m` using steps `m..upto`.
    pub fn compute(&self, m: usize, upto: usize) -> (T, T) {
        let n = self.entry(m).p.len();
        let mut s = vec![T::zero(); n];
        for j in m..upto {
            let e = self.entry(j);
            axpy(e.alpha, &e.p, &mut s);
        }
        let l2 = dot(&s, &s);
        let r_m = &self.entry(m).r;
        let anorm = if m == 0 {
            dot(r_m, &s)
        } else {
            let e = self.entry(m - 1);
            let mut t = s;
            axpy(e.alpha, &e.p, &mut t);
            -(e.alpha * e.rp) + dot(r_m, &t) + e.alpha * e.alpha * e.pap
        };
        (anorm, l2)
    }

    fn emit(&mut self, m: usize, upto: usize, truncated: bool) {
        let (a, l) = self.compute(m, upto);
        self.out.anorm.push_abs(m, a.to_f64(), truncated);
        self.out.l2.push_floored(m, l.to_f64(), truncated);
        self.next_emit = m + 1;
    }

    fn evict(&mut self) {
        // iterate `next_emit` still needs step `next_emit - 1`
        while self.first + 1 < self.next_emit {
            self.window.pop_front();
            self.first += 1;
        }
    }

    pub fn finish(mut self) -> BicgqlSeries {
        if self.tail == TailMode::Truncate {
            for m in self.next_emit..self.last_k {
                self.emit(m, self.last_k, true);
            }
        }
        self.out
    }
}

impl<T: Scalar> StepObserver for BicgqlEstimator<T> {
    fn observe(&mut self, v: &StepView<'_>) -> Control {
        self.last_k = v.k;
        if let Some(s) = v.step {
            self.push_step(T::from_f64(s.alpha), lift(s.p), &lift::<T>(s.ap), lift(s.r_prev));
            if v.k >= self.d {
                self.emit(v.k - self.d, v.k, false);
                self.evict();
            }
        }
        Control::Continue
    }
}

/// Runs Bi-CG (or CG, whose iterates Bi-CG reproduces on symmetric input)
/// with a BiCGQL estimator attached.
pub fn bicgql_run(
    p: &ProblemInstance,
    solver: SolverKind,
    max_it: usize,
    d: usize,
    tail: TailMode,
) -> Result<(ConvergenceTrace, BicgqlSeries), EstimateError> {
    let mut est = BicgqlEstimator::<f64>::new(d, tail)?;
    let trace = match solver {
        SolverKind::Bicg => bicg_run(p, max_it, &mut est)?,
        SolverKind::Cg => cg_run(p, max_it, &mut est)?,
        SolverKind::Gmres => return Err(EstimateError::Domain("BiCGQL follows CG or Bi-CG".into())),
    };
    Ok((trace, est.finish()))
}
