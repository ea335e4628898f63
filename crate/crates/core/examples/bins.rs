//! Mean relative l2-estimation error of Bi-CG + BiCGQL in six
//! condition-number bins.
//!
//! cargo run --release --example bins

use krylov_errest::matstore::{SpectrumKind, SpectrumSpec};
use krylov_errest::urlab::{bin_experiment, SweepOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bins: Vec<(f64, Vec<SpectrumSpec>)> = (1..=6)
        .map(|e| {
            let kappa = 10f64.powi(e);
            let specs =
                (0..5).map(|i| SpectrumSpec::new(100, kappa, SpectrumKind::Indefinite, 0.1, 100 * e as u64 + i));
            (kappa, specs.collect())
        })
        .collect();
    let report = bin_experiment(&bins, 5, 10, &SweepOptions::default())?;
    for b in &report.rows {
        println!("κ = {:>7.0e}: mean |χ/‖ε‖ − 1| = {:.3} over {} estimates", b.kappa, b.mean_rel_error, b.terms);
    }
    println!("max/min bin ratio {:.2}", report.spread().unwrap_or(f64::NAN));
    Ok(())
}
