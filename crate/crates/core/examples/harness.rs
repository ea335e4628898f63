//! The experiment commands called in-process: same arguments as the
//! `krylov-errest` binary, CSV kept in memory.
//!
//! cargo run --example harness

use krylov_errest::harness::{resolve, run_command};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = resolve(["krylov-errest", "stop-compare", "--gen", "80,1e5,pd", "--tols", "1e-3,1e-6"])?;
    let report = run_command(&cfg)?;
    print!("{}", String::from_utf8(report.to_csv())?);

    let cfg = resolve(["krylov-errest", "ur-sweep", "--suite", "60,10,1e2,1e5,indefinite", "--seed", "7"])?;
    let report = run_command(&cfg)?;
    println!("{} rows, {}", report.rows.len(), report.footer.join(" "));
    Ok(())
}
