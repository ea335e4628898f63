//! Original and offset-corrected GMRES error estimates, and the precision
//! trigger that flags when ‖s_k‖ stops being trustworthy.
//!
//! cargo run --example gmres_modified

use krylov_errest::estimate::{gmres_estimate_run, TailMode};
use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = generate_problem(&SpectrumSpec::new(100, 1e6, SpectrumKind::NonsymPosdef, 0.1, 3))?;
    let (trace, s) = gmres_estimate_run(&p, 100, 10, TailMode::Drop)?;

    println!("{:>5} {:>12} {:>12} {:>12}", "k", "‖ε‖", "original", "modified");
    for (o, m) in s.original.estimates.iter().zip(&s.modified.estimates).step_by(8) {
        let e = trace.records[o.k].true_err_norm.unwrap();
        println!("{:>5} {:>12.3e} {:>12.3e} {:>12.3e}", o.k, e, o.chi(), m.chi());
    }
    match s.first_trigger() {
        Some(k) => println!("precision trigger raised at iteration {k}"),
        None => println!("precision trigger never raised"),
    }
    Ok(())
}
