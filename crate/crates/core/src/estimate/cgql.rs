//! CGQL: delayed quadrature estimates of `‖ε_k‖_A²` from CG coefficients.
//!
//! The Gauss estimate for iterate `k` is `Σ_{j=k}^{k+d-1} α_j ‖r_j‖²`, a lower
//! bound. Adding the Gauss–Radau remainder at iterate `k+d`, computed from
//! the Lanczos recurrences with a prescribed eigenvalue `λ`, gives an upper
//! bound for `λ = λ_min` and a sharper lower bound for `λ = λ_max`.

use crate::krylov::{cg_run, Control, ConvergenceTrace, StepObserver, StepView};
use crate::matstore::ProblemInstance;

use super::{check_delay, EstimateError, EstimateSeries, EstimatorVariant, TailMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpectralBounds {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self, EstimateError> {
        if !(lambda_min < lambda_max) {
            return Err(EstimateError::Domain(format!("λ_m = {lambda_min} must be below λ_M = {lambda_max}")));
        }
        if !(lambda_min > 0.0) {
            return Err(EstimateError::Domain(format!("λ_m = {lambda_min} must be positive")));
        }
        Ok(Self { lambda_min, lambda_max })
    }

    /// Extreme eigenvalues of a symmetric matrix, pushed outward by the
    /// factor `widen ≥ 1`. Nodes sitting exactly on the spectrum make the
    /// Radau recurrence cancel badly once a Ritz value reaches them.
    pub fn from_symmetric(a: &crate::matstore::DenseMatrix, widen: f64) -> Result<Self, EstimateError> {
        let eig = a.as_nalgebra().clone().symmetric_eigenvalues();
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo / widen, hi * widen)
    }
}

#[derive(Debug, Clone)]
pub struct CgqlSeries {
    pub gauss: EstimateSeries,
    pub radau_upper: Option<EstimateSeries>,
    pub radau_lower: Option<EstimateSeries>,
}

/// Gauss–Radau remainder `(T̄_{k+1}⁻¹)₁₁ − (T_k⁻¹)₁₁` for one prescribed eigenvalue.
#[derive(Debug, Clone)]
struct Radau {
    lambda: f64,
    delta_bar: f64,
    remainder: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Recurrence {
    delta: f64,
    c_sq: f64,
    eta: f64,
    alpha: f64,
    beta: f64,
    upper: Radau,
    lower: Radau,
}

#[derive(Debug)]
pub struct CgqlEstimator {
    d: usize,
    tail: TailMode,
    bounds: Option<SpectralBounds>,
    r0_sq: f64,
    terms: Vec<f64>,
    rec: Option<Recurrence>,
    last_k: usize,
    out: CgqlSeries,
    error: Option<EstimateError>,
}

impl CgqlEstimator {
    pub fn new(d: usize, bounds: Option<SpectralBounds>, tail: TailMode) -> Result<Self, EstimateError> {
        check_delay(d)?;
        let series = |v| bounds.is_some().then(|| EstimateSeries::new(v, d));
        Ok(Self {
            d,
            tail,
            bounds,
            r0_sq: 0.0,
            terms: Vec::new(),
            rec: None,
            last_k: 0,
            out: CgqlSeries {
                gauss: EstimateSeries::new(EstimatorVariant::CgqlGauss, d),
                radau_upper: series(EstimatorVariant::CgqlRadau),
                radau_lower: series(EstimatorVariant::CgqlRadauLower),
            },
            error: None,
        })
    }

    pub fn series(&self) -> &CgqlSeries {
        &self.out
    }

    fn radau_update(&mut self, k: usize, alpha: f64, beta: f64) -> Result<(), EstimateError> {
        let Some(bounds) = self.bounds else {
            return Ok(());
        };
        let r0_sq = self.r0_sq;
        let rec = match self.rec.take() {
            None => {
                let omega = 1.0 / alpha;
                let fresh = |lambda: f64| Radau { lambda, delta_bar: omega - lambda, remainder: Vec::new() };
                Recurrence {
                    delta: omega,
                    c_sq: 1.0,
                    eta: 0.0,
                    alpha,
                    beta,
                    upper: fresh(bounds.lambda_min),
                    lower: fresh(bounds.lambda_max),
                }
            }
            Some(mut r) => {
                let omega = 1.0 / alpha + r.beta / r.alpha;
                let eta_sq = r.eta * r.eta;
                r.c_sq *= eta_sq / (r.delta * r.delta);
                r.delta = omega - eta_sq / r.delta;
                for q in [&mut r.upper, &mut r.lower] {
                    q.delta_bar = omega - q.lambda - eta_sq / q.delta_bar;
                }
                r.alpha = alpha;
                r.beta = beta;
                r
            }
        };
        let mut rec = rec;
        if !(rec.delta > 0.0) {
            return Err(EstimateError::QuadratureBreakdown { k, delta: rec.delta });
        }
        rec.eta = beta.sqrt() / alpha;
        let eta_sq = rec.eta * rec.eta;
        let (delta, c_sq) = (rec.delta, rec.c_sq);
        for q in [&mut rec.upper, &mut rec.lower] {
            let omega_bar = q.lambda + eta_sq / q.delta_bar;
            let f = if eta_sq == 0.0 { 0.0 } else { r0_sq * eta_sq * c_sq / (delta * (omega_bar * delta - eta_sq)) };
            q.remainder.push(f);
        }
        self.rec = Some(rec);
        Ok(())
    }

    fn remainders(&self, k: usize) -> Option<(f64, f64)> {
        let b = self.bounds?;
        if k == 0 {
            return Some((self.r0_sq / b.lambda_min, self.r0_sq / b.lambda_max));
        }
        let r = self.rec.as_ref()?;
        Some((r.upper.remainder[k - 1], r.lower.remainder[k - 1]))
    }

    fn emit(&mut self, m: usize, upto: usize, truncated: bool) {
        let gauss: f64 = self.terms[m..upto].iter().sum();
        self.out.gauss.push_abs(m, gauss, truncated);
        if let Some((up, lo)) = self.remainders(upto) {
            if let Some(s) = self.out.radau_upper.as_mut() {
                s.push_abs(m, gauss + up, truncated);
            }
            if let Some(s) = self.out.radau_lower.as_mut() {
                s.push_abs(m, gauss + lo, truncated);
            }
        }
    }

    pub fn finish(mut self) -> Result<CgqlSeries, EstimateError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        if self.tail == TailMode::Truncate {
            let first = self.out.gauss.last().map_or(0, |e| e.k + 1);
            for m in first..self.last_k {
                self.emit(m, self.last_k, true);
            }
        }
        Ok(self.out)
    }
}

impl StepObserver for CgqlEstimator {
    fn observe(&mut self, v: &StepView<'_>) -> Control {
        if self.error.is_some() {
            return Control::Stop;
        }
        self.last_k = v.k;
        let Some(s) = v.step else {
            self.r0_sq = v.r.iter().map(|x| x * x).sum();
            return Control::Continue;
        };
        self.terms.push(s.alpha * s.rho);
        if let Err(e) = self.radau_update(v.k, s.alpha, s.beta) {
            self.error = Some(e);
            return Control::Stop;
        }
        if v.k >= self.d {
            self.emit(v.k - self.d, v.k, false);
        }
        Control::Continue
    }
}

/// Runs CG with a CGQL estimator attached.
pub fn cgql_run(
    p: &ProblemInstance,
    max_it: usize,
    d: usize,
    bounds: Option<SpectralBounds>,
    tail: TailMode,
) -> Result<(ConvergenceTrace, CgqlSeries), EstimateError> {
    let mut est = CgqlEstimator::new(d, bounds, tail)?;
    let trace = cg_run(p, max_it, &mut est)?;
    Ok((trace, est.finish()?))
}
