//! Bi-CG on an indefinite nonsymmetric matrix with the BiCGQL l2 estimator
//! riding along. Each estimate for iterate k arrives d iterations later.
//!
//! cargo run --example estimate

use krylov_errest::estimate::{bicgql_run, TailMode};
use krylov_errest::krylov::SolverKind;
use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = generate_problem(&SpectrumSpec::new(200, 1e5, SpectrumKind::Indefinite, 0.1, 4))?;
    let d = 10;
    let (trace, series) = bicgql_run(&p, SolverKind::Bicg, 600, d, TailMode::Drop)?;
    let x = trace.x_true_norm.unwrap();

    println!("{:>5} {:>12} {:>12} {:>12}", "k", "res_rel", "err_rel", "est_rel");
    for e in series.l2.estimates.iter().step_by(15) {
        let r = &trace.records[e.k];
        println!(
            "{:>5} {:>12.3e} {:>12.3e} {:>12.3e}",
            e.k,
            r.res_norm / trace.b_norm,
            r.true_err_norm.unwrap() / x,
            e.chi() / x
        );
    }
    Ok(())
}
