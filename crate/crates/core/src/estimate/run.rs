use crate::krylov::{
    bicg_run, cg_run, gmres_run, Control, ConvergenceTrace, GmresObserver, GmresView, SolverKind, StepObserver,
    StepView,
};
use crate::matstore::ProblemInstance;

use super::{
    BicgqlEstimator, CgqlEstimator, EstimateError, EstimateSeries, EstimatorVariant, GmresEstimator, SpectralBounds,
    TailMode, TriggerSample,
};

/// How far to run the solver behind an estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    pub max_it: usize,
    /// Stop once `‖r_k‖/‖b‖` falls to this level.
    pub rel_residual: Option<f64>,
}

impl RunLimits {
    pub fn new(max_it: usize) -> Self {
        Self { max_it, rel_residual: None }
    }

    pub fn until(mut self, rel_residual: f64) -> Self {
        self.rel_residual = Some(rel_residual);
        self
    }
}

#[derive(Debug, Clone)]
pub struct VariantRun {
    pub trace: ConvergenceTrace,
    pub series: EstimateSeries,
    /// GMRES estimators only.
    pub trigger: Vec<TriggerSample>,
}

struct Floor {
    level: Option<f64>,
}

impl Floor {
    fn new(p: &ProblemInstance, rel: Option<f64>) -> Self {
        let b = p.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self { level: rel.map(|r| r * b) }
    }

    fn check(&self, res_norm: f64) -> Control {
        match self.level {
            Some(l) if res_norm <= l => Control::Stop,
            _ => Control::Continue,
        }
    }
}

struct WithFloor<'a, O> {
    inner: &'a mut O,
    floor: Floor,
}

impl<O: StepObserver> StepObserver for WithFloor<'_, O> {
    fn observe(&mut self, v: &StepView<'_>) -> Control {
        if self.inner.observe(v) == Control::Stop {
            return Control::Stop;
        }
        self.floor.check(v.r.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

impl<O: GmresObserver> GmresObserver for WithFloor<'_, O> {
    fn observe(&mut self, v: &GmresView<'_>) -> Control {
        if self.inner.observe(v) == Control::Stop {
            return Control::Stop;
        }
        self.floor.check(v.res_norm)
    }
}

/// Runs `solver` with the estimator behind `variant` attached.
///
/// Gauss–Radau variants need `bounds`. CGQL variants need CG, BiCGQL follows
/// CG or Bi-CG and the GMRES variants need GMRES.
pub fn run_variant(
    p: &ProblemInstance,
    solver: SolverKind,
    variant: EstimatorVariant,
    d: usize,
    limits: RunLimits,
    bounds: Option<SpectralBounds>,
    tail: TailMode,
) -> Result<VariantRun, EstimateError> {
    if !variant.supports(solver) {
        return Err(EstimateError::Domain(format!("estimator {variant} cannot follow {solver}")));
    }
    let floor = Floor::new(p, limits.rel_residual);
    let max_it = limits.max_it;
    use EstimatorVariant::*;
    match variant {
        CgqlGauss | CgqlRadau | CgqlRadauLower => {
            if variant != CgqlGauss && bounds.is_none() {
                return Err(EstimateError::Domain("Gauss–Radau bounds need λ_min and λ_max".into()));
            }
            let mut est = CgqlEstimator::new(d, bounds, tail)?;
            let trace = cg_run(p, max_it, &mut WithFloor { inner: &mut est, floor })?;
            let s = est.finish()?;
            let series = match variant {
                CgqlRadau => s.radau_upper,
                CgqlRadauLower => s.radau_lower,
                _ => Some(s.gauss),
            }
            .expect("bounds checked above");
            Ok(VariantRun { trace, series, trigger: Vec::new() })
        }
        BicgqlAnorm | BicgqlL2 => {
            let mut est = BicgqlEstimator::<f64>::new(d, tail)?;
            let mut obs = WithFloor { inner: &mut est, floor };
            let trace =
                if solver == SolverKind::Cg { cg_run(p, max_it, &mut obs)? } else { bicg_run(p, max_it, &mut obs)? };
            let s = est.finish();
            let series = if variant == BicgqlAnorm { s.anorm } else { s.l2 };
            Ok(VariantRun { trace, series, trigger: Vec::new() })
        }
        GmresOriginal | GmresModified => {
            let mut est = GmresEstimator::new(d, tail)?;
            let trace = gmres_run(p, max_it, &mut WithFloor { inner: &mut est, floor })?;
            let s = est.finish();
            let series = if variant == GmresOriginal { s.original } else { s.modified };
            Ok(VariantRun { trace, series, trigger: s.trigger })
        }
    }
}
