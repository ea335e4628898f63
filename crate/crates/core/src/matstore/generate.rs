//! Synthetic problems with a prescribed eigenvalue spread.
//!
//! `A = Q (Λ + N) Qᵀ` where `Λ` holds the target eigenvalues, `N` is
//! strictly upper triangular (so the eigenvalues of `A` are exactly those
//! of `Λ`) and `Q` is Haar-distributed orthogonal.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{norm2, DenseMatrix, MatrixError, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Symmetric positive definite; `nonnormality` is ignored.
    Spd,
    /// Positive eigenvalues with a non-normal perturbation.
    NonsymPosdef,
    /// Half of the eigenvalues negated.
    Indefinite,
}

impl std::str::FromStr for SpectrumKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "spd" => Ok(Self::Spd),
            "nonsym_posdef" | "posdef" | "pd" => Ok(Self::NonsymPosdef),
            "indefinite" | "indef" => Ok(Self::Indefinite),
            other => Err(format!("unknown spectrum kind `{other}`")),
        }
    }
}

impl std::fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spd => "spd",
            Self::NonsymPosdef => "nonsym_posdef",
            Self::Indefinite => "indefinite",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectrumSpec {
    pub n: usize,
    pub kappa_target: f64,
    pub kind: SpectrumKind,
    /// Entries of the strictly upper part are uniform in `[-nonnormality, nonnormality]`.
    pub nonnormality: f64,
    pub seed: u64,
}

impl SpectrumSpec {
    pub fn new(n: usize, kappa_target: f64, kind: SpectrumKind, nonnormality: f64, seed: u64) -> Self {
        Self { n, kappa_target, kind, nonnormality, seed }
    }

    pub fn validate(&self) -> Result<(), MatrixError> {
        if self.n == 0 {
            return Err(MatrixError::Domain("dimension must be positive".into()));
        }
        if !(self.kappa_target >= 1.0) || !self.kappa_target.is_finite() {
            return Err(MatrixError::Domain(format!("kappa_target {} < 1", self.kappa_target)));
        }
        if !(self.nonnormality >= 0.0) || !self.nonnormality.is_finite() {
            return Err(MatrixError::Domain(format!("nonnormality {} < 0", self.nonnormality)));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("gen-{}-n{}-k{:e}-s{}", self.kind, self.n, self.kappa_target, self.seed)
    }
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Isotropic random unit vector.
pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, n);
        let nrm = norm2(&v);
        if nrm > 0.0 {
            v.iter_mut().for_each(|x| *x /= nrm);
            return v;
        }
    }
}

fn haar_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Target eigenvalues: extremes pinned at 1 and `kappa`, the rest uniform
/// in between, in random order. Indefinite spectra negate a random half.
pub fn target_eigenvalues(rng: &mut impl Rng, spec: &SpectrumSpec) -> Vec<f64> {
    let n = spec.n;
    let kappa = spec.kappa_target;
    let mut eig: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => kappa,
            _ => rng.random_range(1.0..=kappa),
        })
        .collect();
    eig.shuffle(rng);
    if spec.kind == SpectrumKind::Indefinite {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for &i in &idx[..n / 2] {
            eig[i] = -eig[i];
        }
    }
    eig
}

pub fn generate_matrix(spec: &SpectrumSpec) -> Result<(DenseMatrix, Vec<f64>), MatrixError> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed);
    let n = spec.n;
    let eig = target_eigenvalues(&mut rng, spec);
    let q = haar_orthogonal(&mut rng, n);
    let mut core = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eig));
    if spec.kind != SpectrumKind::Spd && spec.nonnormality > 0.0 {
        for j in 1..n {
            for i in 0..j {
                core[(i, j)] = rng.random_range(-spec.nonnormality..=spec.nonnormality);
            }
        }
    }
    let mut a = &q * core * q.transpose();
    if spec.kind == SpectrumKind::Spd {
        let at = a.transpose();
        a = (a + at) * 0.5;
    }
    Ok((DenseMatrix::from_nalgebra(a)?, eig))
}

/// Deterministic under `spec.seed`: matrix, then `b`, then `x0`.
pub fn generate_problem(spec: &SpectrumSpec) -> Result<ProblemInstance, MatrixError> {
    let (a, _) = generate_matrix(spec)?;
    let mut rng = rng_for(spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let b = random_unit_vector(&mut rng, spec.n);
    let x0 = random_unit_vector(&mut rng, spec.n);
    ProblemInstance::with_oracle(a, b, x0, spec.label())
        .map_err(|e| MatrixError::Generation(format!("{}: {e}", spec.label())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_kappa_gives_orthogonal_similarity_of_identity() {
        let p = generate_problem(&SpectrumSpec::new(3, 1.0, SpectrumKind::Spd, 0.0, 7)).unwrap();
        let diff = p.a.as_nalgebra() - DMatrix::<f64>::identity(3, 3);
        assert!(diff.norm() < 1e-14, "{diff}");
    }

    #[test]
    fn kappa_below_one_is_a_domain_error() {
        let err = generate_problem(&SpectrumSpec::new(3, 0.5, SpectrumKind::Spd, 0.0, 1)).unwrap_err();
        assert!(matches!(err, MatrixError::Domain(_)));
    }

    #[test]
    fn indefinite_flips_half() {
        let spec = SpectrumSpec::new(10, 100.0, SpectrumKind::Indefinite, 0.0, 3);
        let eig = target_eigenvalues(&mut rng_for(1), &spec);
        assert_eq!(eig.iter().filter(|v| **v < 0.0).count(), 5);
        let mags: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        assert!(mags.iter().all(|m| (1.0..=100.0).contains(m)));
        assert!(mags.contains(&1.0) && mags.contains(&100.0));
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SpectrumSpec::new(20, 1e3, SpectrumKind::NonsymPosdef, 0.1, 11);
        let p1 = generate_problem(&spec).unwrap();
        let p2 = generate_problem(&spec).unwrap();
        assert_eq!(p1.a, p2.a);
        assert_eq!(p1.b, p2.b);
        assert_eq!(p1.x0, p2.x0);
    }

    #[test]
    fn spd_is_exactly_symmetric_with_positive_spectrum() {
        let spec = SpectrumSpec::new(30, 1e4, SpectrumKind::Spd, 0.3, 5);
        let p = generate_problem(&spec).unwrap();
        assert_eq!(p.a.symmetry_defect(), 0.0);
        let eig = nalgebra::SymmetricEigen::new(p.a.as_nalgebra().clone()).eigenvalues;
        assert!(eig.iter().all(|&l| l > 0.0));
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max / min / 1e4 - 1.0).abs() < 1e-8);
    }
}
