//! Uncertainty ratio against κ(A,x) over a generated indefinite suite,
//! with the decade-bucketed log-log slope.
//!
//! cargo run --release --example ur_sweep

use krylov_errest::estimate::EstimatorVariant;
use krylov_errest::krylov::SolverKind;
use krylov_errest::matstore::{SpectrumKind, SpectrumSpec};
use krylov_errest::urlab::{theory_expectations, ur_sweep, SweepOptions, SweepSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let specs = (0..60)
        .map(|i| {
            let kappa = 10f64.powf(2.0 + 4.0 * i as f64 / 59.0);
            SpectrumSpec::new(100, kappa, SpectrumKind::Indefinite, 0.1, 1000 + i)
        })
        .collect();
    let setup =
        SweepSetup { specs, rhs_per_matrix: 1, solver: SolverKind::Bicg, variant: EstimatorVariant::BicgqlL2, d: 10 };
    let opts = SweepOptions { fit_range: Some((10.0, 1e5)), ..SweepOptions::default() };
    let report = ur_sweep(&setup, &opts)?;

    println!("{:>12} {:>12} {:>12}", "κ(A,x)", "U.R.(1)", "E(U.R.(1))");
    for s in report.samples().step_by(6) {
        let (e1, _) = theory_expectations(s.n, s.d, s.kappa_f_forward)?;
        println!("{:>12.3e} {:>12.3e} {:>12.3e}", s.kappa_forward, s.ur1, e1);
    }
    println!("fitted slope {:.3} ({} failures)", report.slope.unwrap_or(f64::NAN), report.failures());
    Ok(())
}
