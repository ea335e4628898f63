//! Where residual, estimator and oracle stopping land on the same run,
//! and how many iterations residual stopping wastes or gives up.
//!
//! cargo run --example stop_compare

use krylov_errest::estimate::{run_variant, EstimatorVariant, RunLimits, TailMode};
use krylov_errest::krylov::SolverKind;
use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};
use krylov_errest::stopcrit::{run_with_policy, stop_accounting, StoppingPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = generate_problem(&SpectrumSpec::new(100, 1e6, SpectrumKind::NonsymPosdef, 0.1, 0))?;
    let (solver, variant, d) = (SolverKind::Bicg, EstimatorVariant::BicgqlL2, 10);
    let full = run_variant(&p, solver, variant, d, RunLimits::new(400), None, TailMode::Drop)?;

    for tol in [1e-2, 1e-4, 1e-6, 1e-8] {
        let a = stop_accounting(&full.trace, Some(&full.series), tol)?;
        let est = run_with_policy(&p, solver, &StoppingPolicy::estimator(variant, tol), d, 400)?;
        println!(
            "tol {tol:.0e}: i_res {:?} i_est {:?} i_true {:?}  computation loss {:?}  estimator policy halts at {}",
            a.i_res, a.i_est, a.i_true, a.computation_loss, est.stop
        );
    }
    Ok(())
}
