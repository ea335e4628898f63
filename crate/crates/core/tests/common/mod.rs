#![allow(dead_code)]

use krylov_errest::matstore::{generate_problem, SpectrumKind, SpectrumSpec};
use krylov_errest::{DenseMatrix, ProblemInstance};

pub fn generated(n: usize, kappa: f64, kind: SpectrumKind, nonnormality: f64, seed: u64) -> ProblemInstance {
    generate_problem(&SpectrumSpec::new(n, kappa, kind, nonnormality, seed)).expect("generation")
}

pub fn spd(n: usize, kappa: f64, seed: u64) -> ProblemInstance {
    generated(n, kappa, SpectrumKind::Spd, 0.0, seed)
}

pub fn nonsym(n: usize, kappa: f64, seed: u64) -> ProblemInstance {
    generated(n, kappa, SpectrumKind::NonsymPosdef, 0.1, seed)
}

pub fn with_zero_start(mut p: ProblemInstance) -> ProblemInstance {
    p.x0.iter_mut().for_each(|v| *v = 0.0);
    p
}

pub fn diag_problem(diag: &[f64], b: &[f64]) -> ProblemInstance {
    let a = DenseMatrix::from_diagonal(diag).unwrap();
    ProblemInstance::with_oracle(a, b.to_vec(), vec![0.0; b.len()], "diag").unwrap()
}

pub fn dense_problem(rows: usize, data: Vec<f64>, b: &[f64]) -> ProblemInstance {
    let a = DenseMatrix::from_row_major(rows, rows, data).unwrap();
    ProblemInstance::with_oracle(a, b.to_vec(), vec![0.0; b.len()], "dense").unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn residual(p: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    p.a.matvec(x).iter().zip(&p.b).map(|(ax, b)| b - ax).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
