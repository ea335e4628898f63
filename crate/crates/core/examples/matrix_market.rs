//! Matrix Market round trip and the condition numbers of a file-based
//! problem.
//!
//! cargo run --example matrix_market [PATH.mtx]

use krylov_errest::matstore::{
    condition_report, generate_matrix, mm_read, mm_write, MarketLayout, SpectrumKind, SpectrumSpec,
};
use krylov_errest::ProblemInstance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            // No file given: write a generated matrix and read it back.
            let (a, _) = generate_matrix(&SpectrumSpec::new(30, 1e3, SpectrumKind::NonsymPosdef, 0.1, 2))?;
            let path = std::env::temp_dir().join("krylov-errest-example.mtx");
            mm_write(&path, &a, MarketLayout::Coordinate)?;
            path
        }
    };
    let a = mm_read(&path)?;
    let n = a.nrows();
    println!("{}: {n}x{} matrix", path.display(), a.ncols());

    let b = vec![1.0 / (n as f64).sqrt(); n];
    let p = ProblemInstance::with_oracle(a, b, vec![0.0; n], "file")?;
    let c = condition_report(&p)?;
    println!("κ(A) = {:.3e}", c.kappa_matrix);
    println!("κ(A,x) = {:.3e}, κ(A,b) = {:.3e}", c.kappa_forward, c.kappa_backward);
    println!("κ_F(A,x) = {:.3e}", c.kappa_f_forward);
    Ok(())
}
