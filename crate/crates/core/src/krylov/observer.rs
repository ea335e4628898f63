use super::gmres::Hessenberg;
use super::trace::Control;

/// Quantities produced by the step that took `x_{k-1}` to `x_k`.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    /// `α_{k-1}`
    pub alpha: f64,
    /// `β_{k-1} = ρ_k / ρ_{k-1}`
    pub beta: f64,
    /// `ρ_{k-1}`: `‖r_{k-1}‖²` for CG, `r̃_{k-1}ᵀ r_{k-1}` for Bi-CG.
    pub rho: f64,
    /// `p_{k-1}`
    pub p: &'a [f64],
    /// `A p_{k-1}`
    pub ap: &'a [f64],
    /// `r_{k-1}`
    pub r_prev: &'a [f64],
}

/// State handed to a CG or Bi-CG observer once iterate `k` exists.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub k: usize,
    pub x: &'a [f64],
    pub r: &'a [f64],
    /// Shadow residual `r̃_k` (Bi-CG only).
    pub rt: Option<&'a [f64]>,
    /// Shadow iterate `y_k` with `r̃_k = b − Aᵀ y_k` (Bi-CG only).
    pub y: Option<&'a [f64]>,
    /// `None` for the initial iterate.
    pub step: Option<Step<'a>>,
}

pub trait StepObserver {
    fn observe(&mut self, view: &StepView<'_>) -> Control;
}

impl<F: FnMut(&StepView<'_>) -> Control> StepObserver for F {
    fn observe(&mut self, view: &StepView<'_>) -> Control {
        self(view)
    }
}

/// State handed to a GMRES observer once iterate `k` exists.
#[derive(Debug, Clone, Copy)]
pub struct GmresView<'a> {
    pub k: usize,
    pub x: &'a [f64],
    pub res_norm: f64,
    pub r0_norm: f64,
    /// Unrotated Hessenberg with `k` columns.
    pub hess: &'a Hessenberg,
    /// `h_{k+1,k}` vanished: `x_k` is the exact solution.
    pub happy_breakdown: bool,
}

pub trait GmresObserver {
    fn observe(&mut self, view: &GmresView<'_>) -> Control;
}

impl<F: FnMut(&GmresView<'_>) -> Control> GmresObserver for F {
    fn observe(&mut self, view: &GmresView<'_>) -> Control {
        self(view)
    }
}

/// Observer that never stops the run.
#[derive(Debug, Default, Clone, Copy)]
pub struct Passive;

impl StepObserver for Passive {
    fn observe(&mut self, _: &StepView<'_>) -> Control {
        Control::Continue
    }
}

impl GmresObserver for Passive {
    fn observe(&mut self, _: &GmresView<'_>) -> Control {
        Control::Continue
    }
}
