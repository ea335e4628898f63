//! Uncertainty ratios: how much better an error estimator predicts the
//! relative error than the relative residual does.
//!
//! `U.R.⁽ʲ⁾ = mean_k |(‖r_k‖ʲ/‖b‖ʲ − eʲ) / (χ_kʲ/‖x‖ʲ − eʲ)|` with
//! `e = ‖ε_k‖/‖x‖`. Values above one favour the estimator.

mod sweep;

pub use sweep::{
    bin_experiment, bucketed_slope, delay_sweep, ur_sweep, BinReport, BinRow, DelayRow, StartVector, SweepOptions,
    SweepReport, SweepRow, SweepSetup,
};

use crate::estimate::{EstimateError, EstimateSeries, Measure};
use crate::krylov::ConvergenceTrace;
use crate::matstore::{condition_report, MatrixError, ProblemInstance};
use crate::stopcrit::XNorm;

/// Relative size below which a denominator counts as zero.
pub const DENOMINATOR_GUARD: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum UrError {
    #[error("trace has {m} iterates, needs more than d = {d}")]
    InsufficientTrace { m: usize, d: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("uncertainty ratios need the oracle solution")]
    MissingOracle,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// One term of the average. `None` means the denominator was guarded.
///
/// A numerator below the guard gives 0 whatever the denominator: the
/// residual already predicts the error exactly, so there is nothing for
/// the estimator to improve on.
pub fn ur_term(res_rel: f64, err_rel: f64, est_rel: f64, j: i32) -> Option<f64> {
    let e = err_rel.powi(j);
    let guard = DENOMINATOR_GUARD * e;
    let num = res_rel.powi(j) - e;
    if num.abs() <= guard {
        return Some(0.0);
    }
    let den = est_rel.powi(j) - e;
    if den.abs() <= guard {
        return None;
    }
    Some((num / den).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UrMetrics {
    pub ur1: f64,
    pub ur2: f64,
    /// Terms averaged (per exponent the larger count of guarded terms is
    /// subtracted from the window).
    pub included_iterations: usize,
    pub skipped_iterations: usize,
}

/// Pure metric over a trace and its estimates.
///
/// The window is `k = 0..m−d` where `m` is the number of iterates in the
/// trace. Estimates in the series' own measure are compared with oracle
/// errors in that measure. Iterates with no estimate count as skipped.
pub fn uncertainty_ratio(
    trace: &ConvergenceTrace,
    series: &EstimateSeries,
    proxy: XNorm,
) -> Result<UrMetrics, UrError> {
    let d = series.d;
    let m = trace.records.len();
    if m <= d {
        return Err(UrError::InsufficientTrace { m, d });
    }
    if trace.b_norm <= 0.0 {
        return Err(UrError::Domain("zero right-hand side".into()));
    }
    let anorm = series.variant.measure() == Measure::ANorm;
    let x_ref = match proxy {
        XNorm::Oracle => {
            Some(if anorm { trace.x_true_anorm } else { trace.x_true_norm }.ok_or(UrError::MissingOracle)?)
        }
        XNorm::Iterate => None,
    };
    let (mut s1, mut s2) = (0.0, 0.0);
    let (mut n1, mut n2) = (0usize, 0usize);
    let window = m - d;
    for rec in &trace.records[..window] {
        let err = if anorm { rec.true_err_anorm_sq.map(f64::sqrt) } else { rec.true_err_norm }
            .ok_or(UrError::MissingOracle)?;
        let Some(est) = series.at(rec.k) else {
            continue;
        };
        let xn = x_ref.unwrap_or(if anorm { rec.x_anorm } else { rec.x_norm });
        if xn <= 0.0 {
            continue;
        }
        let res_rel = rec.res_norm / trace.b_norm;
        let (err_rel, est_rel) = (err / xn, est.chi() / xn);
        if let Some(t) = ur_term(res_rel, err_rel, est_rel, 1) {
            s1 += t;
            n1 += 1;
        }
        if let Some(t) = ur_term(res_rel, err_rel, est_rel, 2) {
            s2 += t;
            n2 += 1;
        }
    }
    let included = n1.min(n2);
    if included == 0 {
        return Err(UrError::Domain("every term was guarded".into()));
    }
    Ok(UrMetrics {
        ur1: s1 / n1 as f64,
        ur2: s2 / n2 as f64,
        included_iterations: included,
        skipped_iterations: window - included,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UrSample {
    pub label: String,
    pub n: usize,
    pub d: usize,
    /// `κ(A,x)`, or its A-measure form for A-measure estimators.
    pub kappa_forward: f64,
    pub kappa_f_forward: f64,
    pub ur1: f64,
    pub ur2: f64,
    pub included_iterations: usize,
    pub skipped_iterations: usize,
}

/// [`uncertainty_ratio`] plus the condition numbers of the instance.
pub fn ur_sample(
    p: &ProblemInstance,
    trace: &ConvergenceTrace,
    series: &EstimateSeries,
    proxy: XNorm,
) -> Result<UrSample, UrError> {
    let m = uncertainty_ratio(trace, series, proxy)?;
    let c = condition_report(p)?;
    let kappa_forward = if series.variant.measure() == Measure::ANorm {
        crate::matstore::anorm_forward_condition(&p.a, p.x_true.as_deref().ok_or(UrError::MissingOracle)?)
    } else {
        c.kappa_forward
    };
    Ok(UrSample {
        label: p.label.clone(),
        n: p.n(),
        d: series.d,
        kappa_forward,
        kappa_f_forward: c.kappa_f_forward,
        ur1: m.ur1,
        ur2: m.ur2,
        included_iterations: m.included_iterations,
        skipped_iterations: m.skipped_iterations,
    })
}

/// Expected ratios under isotropic errors, and the worst-case bounds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TheoryCurve {
    pub e_ur1: f64,
    pub e_ur2: f64,
    pub ub1: f64,
    pub ub2: f64,
}

pub fn theory_expectations(n: usize, d: usize, kappa_f: f64) -> Result<(f64, f64), UrError> {
    if d == 0 || d >= n {
        return Err(UrError::Domain(format!("need 1 ≤ d < n, got d = {d}, n = {n}")));
    }
    if !(kappa_f > 0.0) || !kappa_f.is_finite() {
        return Err(UrError::Domain(format!("κ_F = {kappa_f} must be positive")));
    }
    let (nf, df) = (n as f64, d as f64);
    let w = df / (nf - df);
    let h = (df / 2.0).sqrt();
    let log1 = ((nf.sqrt() - h) / ((df + 1.0).sqrt() - h)).ln();
    let e1 = (2.0f64 / 3.0).sqrt() * kappa_f * (1.0 + w * log1 + (2.0 * df).sqrt() / (nf.sqrt() + df.sqrt()));
    let e2 = kappa_f * kappa_f * (1.0 + w * (nf - df).ln());
    Ok((e1, e2))
}

/// `(2κ(A,x)·E^(−2d/n), κ(A,x)²·E^(−2d/n))` for stopping tolerance `E`.
pub fn theory_bounds(n: usize, d: usize, kappa_forward: f64, tol: f64) -> Result<(f64, f64), UrError> {
    if n == 0 || d > n {
        return Err(UrError::Domain(format!("need 0 ≤ d ≤ n, got d = {d}, n = {n}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(UrError::Domain(format!("tolerance {tol} outside (0, 1)")));
    }
    if !(kappa_forward > 0.0) || !kappa_forward.is_finite() {
        return Err(UrError::Domain(format!("κ(A,x) = {kappa_forward} must be positive")));
    }
    let growth = (tol * tol).recip().powf(d as f64 / n as f64);
    Ok((2.0 * kappa_forward * growth, kappa_forward * kappa_forward * growth))
}

pub fn theory_curve(n: usize, d: usize, kappa_f: f64, kappa_forward: f64, tol: f64) -> Result<TheoryCurve, UrError> {
    let (e_ur1, e_ur2) = theory_expectations(n, d, kappa_f)?;
    let (ub1, ub2) = theory_bounds(n, d, kappa_forward, tol)?;
    Ok(TheoryCurve { e_ur1, e_ur2, ub1, ub2 })
}
