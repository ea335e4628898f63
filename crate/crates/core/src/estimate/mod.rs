//! Error estimators that ride along a solver run.
//!
//! Every estimator is an observer. An estimate for iterate `k` is emitted
//! `d` iterations late, once the data it needs exists. At the end of a run
//! the last `d` iterates either get no estimate or, with
//! [`TailMode::Truncate`], one built from the shorter horizon that is left.

mod bicgql;
mod cgql;
mod gmres;
mod run;
mod scalar;
mod trigger;

pub use bicgql::{bicgql_run, BicgqlEstimator, BicgqlSeries};
pub use cgql::{cgql_run, CgqlEstimator, CgqlSeries, SpectralBounds};
pub use gmres::{gmres_estimate_run, GmresEstimator, GmresSeries, TriggerSample};
pub use run::{run_variant, RunLimits, VariantRun};
pub use scalar::{Counted, Scalar};
pub use trigger::{precision_trigger, PrecisionTrigger};

/// Default delay used throughout.
pub const DEFAULT_DELAY: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("quadrature breakdown at iteration {k}: δ = {delta:e}")]
    QuadratureBreakdown { k: usize, delta: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Solver(#[from] crate::krylov::SolverError),
}

/// Norm an estimator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `|εᵀAε|`
    ANorm,
    /// `εᵀε`
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorVariant {
    CgqlGauss,
    CgqlRadau,
    CgqlRadauLower,
    BicgqlAnorm,
    BicgqlL2,
    GmresOriginal,
    GmresModified,
}

impl EstimatorVariant {
    pub fn measure(self) -> Measure {
        match self {
            Self::CgqlGauss | Self::CgqlRadau | Self::CgqlRadauLower | Self::BicgqlAnorm => Measure::ANorm,
            Self::BicgqlL2 | Self::GmresOriginal | Self::GmresModified => Measure::L2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::CgqlGauss => "cgql_gauss",
            Self::CgqlRadau => "cgql_radau",
            Self::CgqlRadauLower => "cgql_radau_lower",
            Self::BicgqlAnorm => "bicgql_anorm",
            Self::BicgqlL2 => "bicgql_l2",
            Self::GmresOriginal => "gmres_original",
            Self::GmresModified => "gmres_modified",
        }
    }

    /// Solvers whose iterations the estimator can follow.
    pub fn supports(self, solver: crate::krylov::SolverKind) -> bool {
        use crate::krylov::SolverKind::*;
        match self {
            Self::CgqlGauss | Self::CgqlRadau | Self::CgqlRadauLower => solver == Cg,
            Self::BicgqlAnorm | Self::BicgqlL2 => matches!(solver, Cg | Bicg),
            Self::GmresOriginal | Self::GmresModified => solver == Gmres,
        }
    }
}

impl std::str::FromStr for EstimatorVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cgql" | "cgql-gauss" => Ok(Self::CgqlGauss),
            "cgql-radau" => Ok(Self::CgqlRadau),
            "cgql-radau-lower" => Ok(Self::CgqlRadauLower),
            "bicgql-anorm" => Ok(Self::BicgqlAnorm),
            "bicgql-l2" => Ok(Self::BicgqlL2),
            "gmres-orig" | "gmres-original" => Ok(Self::GmresOriginal),
            "gmres-mod" | "gmres-modified" => Ok(Self::GmresModified),
            other => Err(format!("unknown estimator `{other}`")),
        }
    }
}

impl std::fmt::Display for EstimatorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// What to do with the last `d` iterates of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailMode {
    #[default]
    Drop,
    /// Emit them using whatever shorter horizon remains.
    Truncate,
}

/// Squared-norm estimate for one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub k: usize,
    /// Reported value, never negative.
    pub value_sq: f64,
    /// Signed value before the absolute value or floor.
    pub raw: f64,
    /// Built from fewer than `d` look-ahead steps.
    pub truncated: bool,
}

impl Estimate {
    pub fn chi(&self) -> f64 {
        self.value_sq.sqrt()
    }

    pub fn negative(&self) -> bool {
        self.raw < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub variant: EstimatorVariant,
    pub d: usize,
    /// Strictly increasing in `k`.
    pub estimates: Vec<Estimate>,
    /// Iterates whose estimate was withheld as numerically singular.
    pub withheld: Vec<usize>,
}

impl EstimateSeries {
    pub fn new(variant: EstimatorVariant, d: usize) -> Self {
        Self { variant, d, estimates: Vec::new(), withheld: Vec::new() }
    }

    pub fn at(&self, k: usize) -> Option<&Estimate> {
        self.estimates.binary_search_by_key(&k, |e| e.k).ok().map(|i| &self.estimates[i])
    }

    pub fn last(&self) -> Option<&Estimate> {
        self.estimates.last()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub(crate) fn push_abs(&mut self, k: usize, raw: f64, truncated: bool) {
        self.push(Estimate { k, value_sq: raw.abs(), raw, truncated });
    }

    pub(crate) fn push_floored(&mut self, k: usize, raw: f64, truncated: bool) {
        self.push(Estimate { k, value_sq: raw.max(0.0), raw, truncated });
    }

    fn push(&mut self, e: Estimate) {
        debug_assert!(self.estimates.last().is_none_or(|l| l.k < e.k));
        self.estimates.push(e);
    }
}

pub(crate) fn check_delay(d: usize) -> Result<(), EstimateError> {
    if d == 0 {
        return Err(EstimateError::Domain("delay d must be at least 1".into()));
    }
    Ok(())
}
