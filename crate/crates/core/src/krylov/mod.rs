//! CG, Bi-CG, full GMRES and symmetric Lanczos. Each solver reports every
//! iterate to an observer, which may stop the run; estimators and stopping
//! policies plug in there.

mod bicg;
mod cg;
mod gmres;
mod lanczos;
mod observer;
mod trace;
pub(crate) mod vecops;

pub use bicg::{bicg_run, BREAKDOWN_TOL};
pub use cg::{cg_run, SYMMETRY_TOL};
pub use gmres::{gmres_run, gmres_run_with_basis, Hessenberg, HAPPY_TOL};
pub use lanczos::{lanczos_from_cg, lanczos_run, tridiagonal, LanczosRun, INVARIANT_TOL};
pub use observer::{GmresObserver, GmresView, Passive, Step, StepObserver, StepView};
pub use trace::{BreakdownKind, Control, ConvergenceTrace, IterationRecord, SolverError, SolverKind, Termination};
