//! Solve one generated system with each Krylov method and print how the
//! relative residual and the true relative error fall.
//!
//! cargo run --example solve

use krylov_errest::krylov::{bicg_run, cg_run, gmres_run, ConvergenceTrace, Passive};
use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};

fn summary(t: &ConvergenceTrace) {
    let x = t.x_true_norm.unwrap();
    println!("{:>6}: {} iterations, {:?}", t.solver.to_string(), t.iterations(), t.termination);
    for r in t.records.iter().step_by(10) {
        println!(
            "   k={:>3}  ‖r‖/‖b‖={:.2e}  ‖ε‖/‖x‖={:.2e}",
            r.k,
            r.res_norm / t.b_norm,
            r.true_err_norm.unwrap() / x
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spd = generate_problem(&SpectrumSpec::new(60, 1e3, SpectrumKind::Spd, 0.0, 1))?;
    summary(&cg_run(&spd, 200, &mut Passive)?);

    let nonsym = generate_problem(&SpectrumSpec::new(60, 1e3, SpectrumKind::NonsymPosdef, 0.1, 1))?;
    summary(&bicg_run(&nonsym, 200, &mut Passive)?);
    summary(&gmres_run(&nonsym, 60, &mut Passive)?);
    Ok(())
}
