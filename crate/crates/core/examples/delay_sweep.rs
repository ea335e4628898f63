//! Mean uncertainty ratio, normalised by κ_F, as the delay grows, next to
//! the isotropic expectation and the worst-case bound.
//!
//! cargo run --release --example delay_sweep

use krylov_errest::estimate::EstimatorVariant;
use krylov_errest::krylov::SolverKind;
use krylov_errest::matstore::{SpectrumKind, SpectrumSpec};
use krylov_errest::urlab::{delay_sweep, SweepOptions, SweepSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let specs = (0..10).map(|i| SpectrumSpec::new(100, 1e4, SpectrumKind::Spd, 0.0, 50 + i)).collect();
    let setup =
        SweepSetup { specs, rhs_per_matrix: 1, solver: SolverKind::Cg, variant: EstimatorVariant::BicgqlL2, d: 10 };
    let rows = delay_sweep(&setup, &[1, 5, 10, 20, 30], 1e-6, &SweepOptions::default())?;

    println!("{:>6} {:>12} {:>12} {:>12}", "d/n", "UR1/κ_F", "expected", "bound");
    for r in &rows {
        println!("{:>6.2} {:>12.3e} {:>12.3e} {:>12.3e}", r.d_over_n, r.ur1_norm, r.e_ur1_norm, r.ub1_norm);
    }
    Ok(())
}
