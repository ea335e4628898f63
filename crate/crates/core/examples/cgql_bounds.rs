//! CGQL on an SPD system: the Gauss estimate is a lower bound on the
//! squared A-norm error and Gauss–Radau with a node above the spectrum is
//! an upper bound.
//!
//! cargo run --example cgql_bounds

use krylov_errest::estimate::{cgql_run, SpectralBounds, TailMode};
use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = generate_problem(&SpectrumSpec::new(100, 1e4, SpectrumKind::Spd, 0.0, 8))?;
    // Nodes a hair outside the spectrum keep the Radau recurrence stable.
    let bounds = SpectralBounds::from_symmetric(&p.a, 1.001)?;
    let (trace, s) = cgql_run(&p, 300, 5, Some(bounds), TailMode::Drop)?;
    let upper = s.radau_upper.expect("bounds were given");

    println!("{:>5} {:>12} {:>12} {:>12}", "k", "gauss", "‖ε‖²_A", "radau");
    for (g, u) in s.gauss.estimates.iter().zip(&upper.estimates).step_by(12) {
        let truth = trace.records[g.k].true_err_anorm_sq.unwrap();
        println!("{:>5} {:>12.4e} {:>12.4e} {:>12.4e}", g.k, g.value_sq, truth, u.value_sq);
    }
    Ok(())
}
