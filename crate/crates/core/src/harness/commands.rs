use std::fmt::Display;

use crate::estimate::{run_variant, EstimateSeries, EstimatorVariant, Measure, RunLimits, SpectralBounds, TailMode};
use crate::krylov::{bicg_run, cg_run, gmres_run, Control, GmresView, SolverKind, StepView, SYMMETRY_TOL};
use crate::matstore::{generate_problem, mm_read, mm_read_vector, random_unit_vector, rng_for, MatrixError};
use crate::matstore::{DenseMatrix, ProblemInstance};
use crate::stopcrit::{run_with_policy, stop_accounting, StoppingPolicy};
use crate::urlab::{bin_experiment, delay_sweep, theory_expectations, ur_sweep, SweepOptions, SweepSetup, UrError};

use super::{CommandKind, ExperimentReport, HarnessError, MatrixSource, RunConfig, SuiteSpec};

const DEFAULT_D_GRID: [usize; 5] = [1, 5, 10, 20, 30];
const SWEEP_STOP: f64 = 1e-10;
/// Widening of the Gauss–Radau nodes around the computed spectrum.
const RADAU_WIDEN: f64 = 1.001;

fn numerical(e: impl Display) -> HarnessError {
    HarnessError::Numerical(e.to_string())
}

fn ur_error(e: UrError) -> HarnessError {
    match e {
        UrError::Domain(msg) => HarnessError::Config(msg),
        other => numerical(other),
    }
}

fn file_error(path: &std::path::Path, e: MatrixError) -> HarnessError {
    match e {
        MatrixError::Io { path, source } => HarnessError::Io { path, source },
        source => HarnessError::MatrixFile { path: path.display().to_string(), source },
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), num)
}

fn opt_idx(v: Option<usize>) -> String {
    v.map_or_else(|| "nan".into(), |k| k.to_string())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The single problem of `solve`, `estimate` and `stop-compare`.
///
/// Files start from `x0 = 0` with `b` from `--rhs` or a seeded random unit
/// vector. The direct-solve oracle is attached when it succeeds.
pub fn load_problem(cfg: &RunConfig) -> Result<ProblemInstance, HarnessError> {
    let mut p = match cfg.source.as_ref() {
        Some(MatrixSource::Generated(spec)) => generate_problem(spec).map_err(numerical)?,
        Some(MatrixSource::File(path)) => {
            let a = mm_read(path).map_err(|e| file_error(path, e))?;
            if !a.is_square() {
                return Err(HarnessError::Config(format!("{}: matrix is {}x{}", path.display(), a.nrows(), a.ncols())));
            }
            let n = a.nrows();
            let b = match &cfg.rhs {
                Some(rp) => mm_read_vector(rp).map_err(|e| file_error(rp, e))?,
                None => random_unit_vector(&mut rng_for(cfg.seed), n),
            };
            let label = path.file_stem().map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned());
            let mut p =
                ProblemInstance::new(a, b, vec![0.0; n], label).map_err(|e| HarnessError::Config(e.to_string()))?;
            // A failed direct solve leaves the oracle absent; commands that need it say so.
            let _ = p.attach_oracle();
            p
        }
        None => return Err(HarnessError::Config("no matrix source".into())),
    };
    if cfg.zero_start {
        p.x0.iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(p)
}

fn require_oracle(p: &ProblemInstance) -> Result<(), HarnessError> {
    if p.x_true.is_some() {
        return Ok(());
    }
    let mut probe = p.clone();
    let why = probe.attach_oracle().err().map_or_else(|| "unknown".into(), |e| e.to_string());
    Err(HarnessError::Numerical(format!("{}: direct solve failed: {why}", p.label)))
}

fn max_it(cfg: &RunConfig, n: usize) -> usize {
    cfg.max_it.unwrap_or(if cfg.solver == SolverKind::Gmres { n } else { 4 * n })
}

fn spd_bounds(a: &DenseMatrix) -> Option<SpectralBounds> {
    if a.is_symmetric(SYMMETRY_TOL) {
        SpectralBounds::from_symmetric(a, RADAU_WIDEN).ok()
    } else {
        None
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let p = load_problem(cfg)?;
    let floor = cfg.tol.map(|t| t * norm(&p.b));
    let stop = |r: f64| if floor.is_some_and(|f| r <= f) { Control::Stop } else { Control::Continue };
    let it = max_it(cfg, p.n());
    let trace = match cfg.solver {
        SolverKind::Cg => cg_run(&p, it, &mut |v: &StepView<'_>| stop(norm(v.r))),
        SolverKind::Bicg => bicg_run(&p, it, &mut |v: &StepView<'_>| stop(norm(v.r))),
        SolverKind::Gmres => gmres_run(&p, it, &mut |v: &GmresView<'_>| stop(v.res_norm)),
    }
    .map_err(numerical)?;
    let mut rep = ExperimentReport::new(CommandKind::Solve);
    for r in &trace.records {
        let err = r.true_err_norm.zip(trace.x_true_norm).map(|(e, x)| e / x);
        rep.rows.push(vec![
            r.k.to_string(),
            num(r.res_norm / trace.b_norm),
            opt_num(err),
            num(r.x_norm),
            if err.is_none() { "no_oracle".into() } else { String::new() },
        ]);
    }
    Ok(rep)
}

fn companion_of(v: EstimatorVariant, bounds: bool) -> Option<EstimatorVariant> {
    use EstimatorVariant::*;
    match v {
        GmresModified => Some(GmresOriginal),
        GmresOriginal => Some(GmresModified),
        CgqlGauss if bounds => Some(CgqlRadau),
        CgqlRadau | CgqlRadauLower => Some(CgqlGauss),
        _ => None,
    }
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let p = load_problem(cfg)?;
    require_oracle(&p)?;
    let variant = cfg.estimator;
    let bounds = if cfg.solver == SolverKind::Cg { spd_bounds(&p.a) } else { None };
    if matches!(variant, EstimatorVariant::CgqlRadau | EstimatorVariant::CgqlRadauLower) && bounds.is_none() {
        return Err(HarnessError::Numerical("Gauss–Radau estimates need a symmetric positive definite matrix".into()));
    }
    let limits = RunLimits { max_it: max_it(cfg, p.n()), rel_residual: cfg.tol };
    let run = run_variant(&p, cfg.solver, variant, cfg.d, limits, bounds, TailMode::Drop).map_err(numerical)?;
    let companion: Option<EstimateSeries> = companion_of(variant, bounds.is_some())
        .map(|v| run_variant(&p, cfg.solver, v, cfg.d, limits, bounds, TailMode::Drop).map(|r| r.series))
        .transpose()
        .map_err(numerical)?;

    let t = &run.trace;
    let anorm = variant.measure() == Measure::ANorm;
    let xn = if anorm { t.x_true_anorm } else { t.x_true_norm }.filter(|&x| x > 0.0);
    let xn = xn.ok_or_else(|| HarnessError::Numerical("solution has zero norm in the estimator's measure".into()))?;
    let rel = |s: Option<&EstimateSeries>, k: usize| s.and_then(|s| s.at(k)).map(|e| e.chi() / xn);

    let mut rep = ExperimentReport::new(CommandKind::Estimate);
    let window = t.records.len().saturating_sub(cfg.d);
    for r in &t.records[..window] {
        let err = if anorm { r.true_err_anorm_sq.map(f64::sqrt) } else { r.true_err_norm }.map(|e| e / xn);
        let est = run.series.at(r.k);
        let latched = run.trigger.iter().take_while(|s| s.k <= r.k + cfg.d).last().is_some_and(|s| s.latched);
        let mut flags = Vec::new();
        if run.series.withheld.contains(&r.k) {
            flags.push("withheld");
        } else if est.is_none() {
            flags.push("no_estimate");
        }
        if est.is_some_and(|e| e.negative()) {
            flags.push("negative");
        }
        if companion.is_none() {
            flags.push("no_companion");
        }
        rep.rows.push(vec![
            r.k.to_string(),
            num(r.res_norm / t.b_norm),
            opt_num(err),
            opt_num(rel(Some(&run.series), r.k)),
            opt_num(rel(companion.as_ref(), r.k)),
            u8::from(latched).to_string(),
            flags.join(";"),
        ]);
    }
    Ok(rep)
}

fn suite(cfg: &RunConfig) -> Result<SuiteSpec, HarnessError> {
    cfg.suite.ok_or_else(|| HarnessError::Config("sweeps need --suite".into()))
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        max_it: cfg.max_it,
        rel_residual: Some(cfg.tol.unwrap_or(SWEEP_STOP)),
        jobs: cfg.jobs,
        fit_range: cfg.fit_range,
        ..SweepOptions::default()
    }
}

fn setup(cfg: &RunConfig, s: &SuiteSpec) -> SweepSetup {
    SweepSetup {
        specs: s.specs(cfg.seed),
        rhs_per_matrix: cfg.rhs_per_matrix,
        solver: cfg.solver,
        variant: cfg.estimator,
        d: cfg.d,
    }
}

pub fn cmd_ur_sweep(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let s = suite(cfg)?;
    let report = ur_sweep(&setup(cfg, &s), &sweep_options(cfg)).map_err(ur_error)?;
    let mut rep = ExperimentReport::new(CommandKind::UrSweep);
    for row in &report.rows {
        let mut cells = vec![row.index.to_string(), row.label.clone()];
        match &row.outcome {
            Ok(u) => {
                let theory = theory_expectations(u.n, u.d, u.kappa_f_forward).ok();
                cells.extend([
                    u.n.to_string(),
                    u.d.to_string(),
                    num(u.kappa_forward),
                    num(u.kappa_f_forward),
                    num(u.ur1),
                    num(u.ur2),
                    u.included_iterations.to_string(),
                    u.skipped_iterations.to_string(),
                    opt_num(theory.map(|t| t.0)),
                    opt_num(theory.map(|t| t.1)),
                    "ok".into(),
                    String::new(),
                ]);
            }
            Err(msg) => {
                cells.extend([s.n.to_string(), cfg.d.to_string()]);
                cells.extend(std::iter::repeat_n("nan".to_string(), 8));
                cells.extend(["failed".into(), msg.clone()]);
            }
        }
        rep.rows.push(cells);
    }
    rep.footer.push(format!("slope={}", opt_num(report.slope)));
    rep.runs = report.rows.len();
    rep.failed_runs = report.failures();
    Ok(rep)
}

pub fn cmd_delay_sweep(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let s = suite(cfg)?;
    let grid: Vec<usize> = if cfg.d_grid.is_empty() {
        DEFAULT_D_GRID.into_iter().filter(|&d| 2 * d <= s.n).collect()
    } else {
        cfg.d_grid.clone()
    };
    if grid.is_empty() {
        return Err(HarnessError::Config(format!("no delay in the default grid fits n = {}", s.n)));
    }
    let rows = delay_sweep(&setup(cfg, &s), &grid, cfg.bound_tol, &sweep_options(cfg)).map_err(ur_error)?;
    let mut rep = ExperimentReport::new(CommandKind::DelaySweep);
    for r in &rows {
        rep.rows.push(vec![
            r.d.to_string(),
            num(r.d_over_n),
            r.samples.to_string(),
            r.failures.to_string(),
            num(r.ur1_norm),
            num(r.ur2_norm),
            num(r.e_ur1_norm),
            num(r.e_ur2_norm),
            num(r.ub1_norm),
            num(r.ub2_norm),
            if r.samples == 0 { "no_samples".into() } else { String::new() },
        ]);
        rep.runs += r.samples + r.failures;
        rep.failed_runs += r.failures;
    }
    Ok(rep)
}

pub fn cmd_bins(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let s = suite(cfg)?;
    let report = bin_experiment(&s.bins(cfg.seed), cfg.rhs_per_matrix, cfg.d, &sweep_options(cfg)).map_err(ur_error)?;
    let mut rep = ExperimentReport::new(CommandKind::Bins);
    for r in &report.rows {
        rep.rows.push(vec![
            num(r.kappa),
            r.runs.to_string(),
            r.failures.to_string(),
            r.terms.to_string(),
            num(r.mean_rel_error),
            if r.is_empty() { "empty".into() } else { "ok".into() },
        ]);
        rep.runs += r.runs;
        rep.failed_runs += r.failures;
    }
    Ok(rep)
}

pub fn cmd_stop_compare(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    let p = load_problem(cfg)?;
    require_oracle(&p)?;
    let it = max_it(cfg, p.n());
    let full = run_variant(&p, cfg.solver, cfg.estimator, cfg.d, RunLimits::new(it), None, TailMode::Drop)
        .map_err(numerical)?;
    let tols: Vec<f64> = match (&cfg.tols[..], cfg.tol) {
        ([], Some(t)) => vec![t],
        ([], None) => (2..=8).map(|e| 10f64.powi(-e)).collect(),
        (list, _) => list.to_vec(),
    };
    let mut rep = ExperimentReport::new(CommandKind::StopCompare);
    for tol in tols {
        let acc = stop_accounting(&full.trace, Some(&full.series), tol).map_err(numerical)?;
        let policies =
            [StoppingPolicy::residual(tol), StoppingPolicy::estimator(cfg.estimator, tol), StoppingPolicy::oracle(tol)];
        for policy in policies {
            let run = run_with_policy(&p, cfg.solver, &policy, cfg.d, it).map_err(numerical)?;
            let mut flags = Vec::new();
            if !run.satisfied {
                flags.push("not_satisfied");
            }
            if acc.i_res.is_none() || acc.i_est.is_none() || acc.i_true.is_none() {
                flags.push("not_reached");
            }
            if !acc.losses_defined() {
                flags.push("losses_undefined");
            }
            rep.rows.push(vec![
                num(tol),
                policy.kind.to_string(),
                run.stop.to_string(),
                u8::from(run.satisfied).to_string(),
                opt_idx(acc.i_res),
                opt_idx(acc.i_est),
                opt_idx(acc.i_true),
                opt_idx(acc.accuracy_loss),
                opt_idx(acc.computation_loss),
                opt_num(acc.delta_rel),
                flags.join(";"),
            ]);
        }
    }
    Ok(rep)
}
