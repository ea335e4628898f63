//! Dense matrices, Matrix Market I/O, synthetic problem generation and
//! condition numbers.

mod condition;
mod dense;
mod generate;
mod market;
mod solve;

pub use condition::{anorm_forward_condition, condition_report, matrix_condition, singular_extremes, ConditionReport};
pub use dense::DenseMatrix;
pub use generate::{
    generate_matrix, generate_problem, random_unit_vector, target_eigenvalues, SpectrumKind, SpectrumSpec,
};
pub use market::{mm_format, mm_parse, mm_read, mm_read_vector, mm_write, MarketLayout};
pub use solve::{direct_solve, residual_correction};

pub(crate) use generate::rng_for;

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("structural error: {0}")]
    Structural(String),
    #[error("unsupported Matrix Market variant: {0}")]
    Unsupported(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("generation failed: {0}")]
    Generation(String),
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative oracle residual accepted for a true solution. For very
/// ill-conditioned systems it is checked before rounding to working precision.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-10;

/// A linear system `A x = b` with its starting guess and, optionally, the
/// direct-solve solution used as the error oracle.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
    pub label: String,
}

impl ProblemInstance {
    pub fn new(a: DenseMatrix, b: Vec<f64>, x0: Vec<f64>, label: impl Into<String>) -> Result<Self, MatrixError> {
        if !a.is_square() {
            return Err(MatrixError::Shape(format!("{}x{} is not square", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        if b.len() != n || x0.len() != n {
            return Err(MatrixError::Shape(format!("dimension {n} with |b| = {}, |x0| = {}", b.len(), x0.len())));
        }
        if b.iter().chain(&x0).any(|v| !v.is_finite()) {
            return Err(MatrixError::Domain("non-finite vector entry".into()));
        }
        Ok(Self { a, b, x0, x_true: None, label: label.into() })
    }

    /// Builds the instance and attaches the direct-solve oracle.
    pub fn with_oracle(
        a: DenseMatrix,
        b: Vec<f64>,
        x0: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self, MatrixError> {
        let mut p = Self::new(a, b, x0, label)?;
        p.attach_oracle()?;
        Ok(p)
    }

    pub fn attach_oracle(&mut self) -> Result<(), MatrixError> {
        let x = direct_solve(&self.a, &self.b)?;
        let mut res = norm2(&solve::compensated_residual(&self.a, &x, &self.b));
        let bn = norm2(&self.b);
        if bn > 0.0 && res / bn > ORACLE_RESIDUAL_TOL {
            // Rounding x to working precision alone leaves a residual near
            // eps·‖A‖‖x‖. Check the unrounded solution x + x_lo instead.
            if let Some(lo) = residual_correction(&self.a, &x, &self.b) {
                res = norm2(&solve::compensated_residual_pair(&self.a, &x, Some(&lo), &self.b));
            }
        }
        if bn > 0.0 && res / bn > ORACLE_RESIDUAL_TOL {
            return Err(MatrixError::Singular(format!(
                "oracle residual {:.3e} exceeds {ORACLE_RESIDUAL_TOL:e}",
                res / bn
            )));
        }
        self.x_true = Some(x);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Same system with `b` and `x0` multiplied by `s`; the oracle scales along.
    pub fn scaled_rhs(&self, s: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.iter().map(|v| v * s).collect(),
            x0: self.x0.iter().map(|v| v * s).collect(),
            x_true: self.x_true.as_ref().map(|x| x.iter().map(|v| v * s).collect()),
            label: self.label.clone(),
        }
    }
}
