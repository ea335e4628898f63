//! Krylov solvers (CG, Bi-CG, GMRES, symmetric Lanczos) instrumented with
//! per-iteration error estimators, plus the tooling to compare
//! estimator-based stopping against relative-residual stopping.
//!
//! * [`matstore`]: dense matrices, Matrix Market I/O, synthetic problems,
//!   condition numbers and the direct-solve error oracle.
//! * [`krylov`]: reference solvers with an observer hook.
//! * [`estimate`]: CGQL, BiCGQL (A-measure and l2) and the GMRES estimator
//!   in its original and offset-corrected forms.
//! * [`stopcrit`]: stopping policies and lost-iteration accounting.
//! * [`urlab`]: uncertainty ratios, theory curves, sweeps.
//! * [`harness`]: the experiment commands behind the `krylov-errest` binary.

pub mod estimate;
pub mod harness;
pub mod krylov;
pub mod matstore;
pub mod stopcrit;
pub mod urlab;

pub use matstore::{DenseMatrix, ProblemInstance};
