use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::estimate::{run_variant, EstimatorVariant, RunLimits, SpectralBounds, TailMode};
use crate::krylov::SolverKind;
use crate::matstore::{generate_matrix, random_unit_vector, rng_for, DenseMatrix, ProblemInstance, SpectrumSpec};
use crate::stopcrit::XNorm;

use super::{theory_bounds, theory_expectations, ur_sample, UrError, UrSample};

/// Starting guess for generated sweep instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartVector {
    /// Random unit vector: the early error is roughly isotropic.
    #[default]
    Random,
    /// `x0 = 0`, so `ε₀ = x`.
    Zero,
}

/// Settings shared by every sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Iteration cap; `None` means `n − 1`. At `k = n` the Krylov space is
    /// exhausted and `x_n` is the solution, so an estimate whose horizon
    /// reaches it is exact by construction and measures nothing.
    pub max_it: Option<usize>,
    /// Relative residual at which runs stop early.
    pub rel_residual: Option<f64>,
    /// `‖x‖` in the relative quantities. `‖x_k‖` by default, as an
    /// iterative method would have it.
    pub proxy: XNorm,
    /// Worker threads; `None` uses rayon's default pool.
    pub jobs: Option<usize>,
    /// Only samples with `κ(A,x)` in `[lo, hi)` enter the slope fit.
    pub fit_range: Option<(f64, f64)>,
    pub start: StartVector,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            max_it: None,
            rel_residual: Some(1e-10),
            proxy: XNorm::Iterate,
            jobs: None,
            fit_range: None,
            start: StartVector::Random,
        }
    }
}

impl SweepOptions {
    fn limits(&self, n: usize) -> RunLimits {
        RunLimits { max_it: self.max_it.unwrap_or(n.saturating_sub(1).max(1)), rel_residual: self.rel_residual }
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.jobs {
            Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }
}

/// Matrices and the solver/estimator pair run on each `(matrix, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSetup {
    pub specs: Vec<SpectrumSpec>,
    pub rhs_per_matrix: usize,
    pub solver: SolverKind,
    pub variant: EstimatorVariant,
    pub d: usize,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub label: String,
    pub outcome: Result<UrSample, String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Log-log slope of bucketed mean U.R.⁽¹⁾ against `κ(A,x)`.
    pub slope: Option<f64>,
}

impl SweepReport {
    pub fn samples(&self) -> impl Iterator<Item = &UrSample> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn fitted(&self, opts: &SweepOptions) -> usize {
        self.samples()
            .filter(|s| opts.fit_range.is_none_or(|(lo, hi)| s.kappa_forward >= lo && s.kappa_forward < hi))
            .count()
    }
}

/// Random unit `b`, deterministic in `(seed, r)`.
fn random_rhs_instance(
    a: &DenseMatrix,
    spec: &SpectrumSpec,
    r: usize,
    start: StartVector,
) -> Result<ProblemInstance, UrError> {
    let mut rng = rng_for(spec.seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ (r as u64 + 1));
    let b = random_unit_vector(&mut rng, spec.n);
    let x0 = match start {
        StartVector::Random => random_unit_vector(&mut rng, spec.n),
        StartVector::Zero => vec![0.0; spec.n],
    };
    Ok(ProblemInstance::with_oracle(a.clone(), b, x0, format!("{}-b{r}", spec.label()))?)
}

fn bounds_for(p: &ProblemInstance, variant: EstimatorVariant) -> Result<Option<SpectralBounds>, UrError> {
    Ok(match variant {
        EstimatorVariant::CgqlRadau | EstimatorVariant::CgqlRadauLower => {
            Some(SpectralBounds::from_symmetric(&p.a, 1.001)?)
        }
        _ => None,
    })
}

fn sample_one(p: &ProblemInstance, setup: &SweepSetup, d: usize, opts: &SweepOptions) -> Result<UrSample, UrError> {
    let run = run_variant(
        p,
        setup.solver,
        setup.variant,
        d,
        opts.limits(p.n()),
        bounds_for(p, setup.variant)?,
        TailMode::Drop,
    )?;
    ur_sample(p, &run.trace, &run.series, opts.proxy)
}

/// Every `(matrix, b)` instance of a setup, in a fixed order.
fn instances(setup: &SweepSetup, start: StartVector) -> Vec<(usize, String, Result<ProblemInstance, String>)> {
    let mut out = Vec::new();
    for spec in &setup.specs {
        let a = generate_matrix(spec).map(|(a, _)| a);
        for r in 0..setup.rhs_per_matrix {
            let idx = out.len();
            let label = format!("{}-b{r}", spec.label());
            let p = match &a {
                Ok(a) => random_rhs_instance(a, spec, r, start).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            out.push((idx, label, p));
        }
    }
    out
}

fn run_rows(setup: &SweepSetup, d: usize, opts: &SweepOptions) -> Vec<SweepRow> {
    opts.install(|| {
        instances(setup, opts.start)
            .into_par_iter()
            .map(|(index, label, p)| {
                let outcome = p.and_then(|p| sample_one(&p, setup, d, opts).map_err(|e| e.to_string()));
                SweepRow { index, label, outcome }
            })
            .collect()
    })
}

/// Runs the setup once per instance. Failed runs are kept as rows.
pub fn ur_sweep(setup: &SweepSetup, opts: &SweepOptions) -> Result<SweepReport, UrError> {
    if setup.d == 0 {
        return Err(UrError::Domain("delay d must be at least 1".into()));
    }
    let rows = run_rows(setup, setup.d, opts);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .filter(|s| opts.fit_range.is_none_or(|(lo, hi)| s.kappa_forward >= lo && s.kappa_forward < hi))
        .map(|s| (s.kappa_forward, s.ur1))
        .collect();
    Ok(SweepReport { slope: bucketed_slope(&pts), rows })
}

/// Least-squares slope of `log ȳ` against `log x̄` over decade buckets of
/// `x`, where each bar is a bucket's geometric mean. Points with
/// non-positive coordinates are ignored. Needs at least two buckets.
pub fn bucketed_slope(points: &[(f64, f64)]) -> Option<f64> {
    let mut buckets: std::collections::BTreeMap<i64, (f64, f64, usize)> = Default::default();
    for &(x, y) in points {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            let e = buckets.entry(x.log10().floor() as i64).or_default();
            e.0 += x.ln();
            e.1 += y.ln();
            e.2 += 1;
        }
    }
    if buckets.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = buckets.values().map(|(lx, ly, c)| (lx / *c as f64, ly / *c as f64)).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean normalized ratios at one delay, next to the theory values.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DelayRow {
    pub d: usize,
    pub d_over_n: f64,
    pub samples: usize,
    pub failures: usize,
    /// Mean of `U.R.⁽¹⁾/κ_F`.
    pub ur1_norm: f64,
    /// Mean of `U.R.⁽²⁾/κ_F²`.
    pub ur2_norm: f64,
    pub e_ur1_norm: f64,
    pub e_ur2_norm: f64,
    /// Instance means of `ub1/κ_F` and `ub2/κ_F²`.
    pub ub1_norm: f64,
    pub ub2_norm: f64,
}

/// Repeats the sweep for each `d` in `d_grid`. `tol` is the stopping
/// tolerance `E` in the worst-case bound.
pub fn delay_sweep(
    setup: &SweepSetup,
    d_grid: &[usize],
    tol: f64,
    opts: &SweepOptions,
) -> Result<Vec<DelayRow>, UrError> {
    let n = setup.specs.first().map(|s| s.n).ok_or_else(|| UrError::Domain("empty suite".into()))?;
    if setup.specs.iter().any(|s| s.n != n) {
        return Err(UrError::Domain("delay sweeps need a single dimension".into()));
    }
    if let Some(&d) = d_grid.iter().find(|&&d| d == 0 || 2 * d > n) {
        return Err(UrError::Domain(format!("d = {d} outside [1, n/2]")));
    }
    let mut out = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let rows = run_rows(setup, d, opts);
        let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
        let samples: Vec<&UrSample> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let (e1, e2) = theory_expectations(n, d, 1.0)?;
        let mut acc = [0.0; 4];
        for s in &samples {
            let kf = s.kappa_f_forward;
            let (ub1, ub2) = theory_bounds(n, d, s.kappa_forward, tol)?;
            acc[0] += s.ur1 / kf;
            acc[1] += s.ur2 / (kf * kf);
            acc[2] += ub1 / kf;
            acc[3] += ub2 / (kf * kf);
        }
        let c = samples.len() as f64;
        let mean = |v: f64| if samples.is_empty() { f64::NAN } else { v / c };
        out.push(DelayRow {
            d,
            d_over_n: d as f64 / n as f64,
            samples: samples.len(),
            failures,
            ur1_norm: mean(acc[0]),
            ur2_norm: mean(acc[1]),
            e_ur1_norm: e1,
            e_ur2_norm: e2,
            ub1_norm: mean(acc[2]),
            ub2_norm: mean(acc[3]),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BinRow {
    pub kappa: f64,
    pub runs: usize,
    pub failures: usize,
    /// Estimates averaged over.
    pub terms: usize,
    /// Mean of `|f_k/‖ε_k‖ − 1|`; NaN when the bin is empty.
    pub mean_rel_error: f64,
}

impl BinRow {
    pub fn is_empty(&self) -> bool {
        self.terms == 0
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BinReport {
    pub rows: Vec<BinRow>,
}

impl BinReport {
    /// Largest over smallest bin mean, ignoring empty bins.
    pub fn spread(&self) -> Option<f64> {
        let means: Vec<f64> = self.rows.iter().filter(|r| !r.is_empty()).map(|r| r.mean_rel_error).collect();
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        (means.len() >= 2 && min > 0.0).then(|| max / min)
    }
}

/// Distinct canonical basis vectors as right-hand sides.
fn canonical_rhs(a: &DenseMatrix, spec: &SpectrumSpec, count: usize) -> Result<Vec<ProblemInstance>, UrError> {
    let n = spec.n;
    if count > n {
        return Err(UrError::Domain(format!("{count} distinct basis vectors requested in dimension {n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(spec.seed ^ 0x5bd1_e995));
    idx[..count]
        .iter()
        .map(|&i| {
            let mut b = vec![0.0; n];
            b[i] = 1.0;
            Ok(ProblemInstance::with_oracle(a.clone(), b, vec![0.0; n], format!("{}-e{i}", spec.label()))?)
        })
        .collect()
}

/// Bi-CG with the BiCGQL l2 estimator over one bin per spec list.
/// Each bin pairs its label `κ(A)` with the matrices it holds.
pub fn bin_experiment(
    bins: &[(f64, Vec<SpectrumSpec>)],
    rhs_per_matrix: usize,
    d: usize,
    opts: &SweepOptions,
) -> Result<BinReport, UrError> {
    if d == 0 {
        return Err(UrError::Domain("delay d must be at least 1".into()));
    }
    let rows = opts.install(|| {
        bins.par_iter()
            .map(|(kappa, specs)| {
                let per_matrix: Vec<(usize, usize, usize, f64)> =
                    specs.par_iter().map(|spec| bin_matrix(spec, rhs_per_matrix, d, opts)).collect();
                let (mut runs, mut failures, mut terms, mut sum) = (0, 0, 0, 0.0);
                for (r, f, t, s) in per_matrix {
                    runs += r;
                    failures += f;
                    terms += t;
                    sum += s;
                }
                BinRow {
                    kappa: *kappa,
                    runs,
                    failures,
                    terms,
                    mean_rel_error: if terms == 0 { f64::NAN } else { sum / terms as f64 },
                }
            })
            .collect()
    });
    Ok(BinReport { rows })
}

/// `(runs, failures, terms, sum of relative errors)` for one matrix.
fn bin_matrix(spec: &SpectrumSpec, rhs: usize, d: usize, opts: &SweepOptions) -> (usize, usize, usize, f64) {
    let problems = match generate_matrix(spec).map_err(UrError::from).and_then(|(a, _)| canonical_rhs(&a, spec, rhs)) {
        Ok(p) => p,
        Err(_) => return (rhs, rhs, 0, 0.0),
    };
    let (mut failures, mut terms, mut sum) = (0, 0, 0.0);
    for p in &problems {
        match run_variant(p, SolverKind::Bicg, EstimatorVariant::BicgqlL2, d, opts.limits(p.n()), None, TailMode::Drop)
        {
            Ok(run) => {
                for e in &run.series.estimates {
                    let err = run.trace.records[e.k].true_err_norm.unwrap_or(0.0);
                    if err > 0.0 {
                        sum += (e.chi() / err - 1.0).abs();
                        terms += 1;
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    (problems.len(), failures, terms, sum)
}
