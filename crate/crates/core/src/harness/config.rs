use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::estimate::{EstimatorVariant, DEFAULT_DELAY};
use crate::krylov::SolverKind;
use crate::matstore::{SpectrumKind, SpectrumSpec};

use super::schema::{schema_help, CommandKind};
use super::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "krylov-errest", version, about = "Krylov solver error-estimation experiments", long_about = None)]
pub(crate) struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub(crate) enum CommandArgs {
    /// Run a solver and write its convergence history.
    #[command(after_help = schema_help(CommandKind::Solve))]
    Solve(Settings),
    /// Run a solver with an error estimator attached.
    #[command(after_help = schema_help(CommandKind::Estimate))]
    Estimate(Settings),
    /// Uncertainty ratios over a generated suite.
    #[command(name = "ur-sweep", after_help = schema_help(CommandKind::UrSweep))]
    UrSweep(Settings),
    /// Mean uncertainty ratios against d/n with the theory overlay.
    #[command(name = "delay-sweep", after_help = schema_help(CommandKind::DelaySweep))]
    DelaySweep(Settings),
    /// Mean relative l2-estimation error per condition-number bin.
    #[command(after_help = schema_help(CommandKind::Bins))]
    Bins(Settings),
    /// Residual, estimator and oracle stopping across tolerances.
    #[command(name = "stop-compare", after_help = schema_help(CommandKind::StopCompare))]
    StopCompare(Settings),
}

impl CommandArgs {
    fn split(self) -> (CommandKind, Settings) {
        match self {
            Self::Solve(s) => (CommandKind::Solve, s),
            Self::Estimate(s) => (CommandKind::Estimate, s),
            Self::UrSweep(s) => (CommandKind::UrSweep, s),
            Self::DelaySweep(s) => (CommandKind::DelaySweep, s),
            Self::Bins(s) => (CommandKind::Bins, s),
            Self::StopCompare(s) => (CommandKind::StopCompare, s),
        }
    }
}

/// Options shared by every command. A TOML file given with `--config`
/// uses the same names with underscores; flags win over the file.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub(crate) struct Settings {
    /// TOML file with default values for any option below.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Matrix Market file holding A.
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    /// Generated matrix: n,kappa,kind[,nonnormality] with kind spd, pd or indefinite.
    #[arg(long, value_name = "SPEC")]
    pub gen: Option<String>,
    /// Right-hand side as an n x 1 Matrix Market file (default: seeded random unit vector).
    #[arg(long, value_name = "PATH")]
    pub rhs: Option<PathBuf>,
    /// Start from x0 = 0 (files always do; generated problems default to a random unit x0).
    #[arg(long)]
    pub zero_start: bool,
    /// Generated suite: n,count,kappa_lo,kappa_hi,kind[,nonnormality].
    #[arg(long, value_name = "SPEC")]
    pub suite: Option<String>,
    /// cg, bicg or gmres.
    #[arg(long)]
    pub solver: Option<String>,
    /// cgql, cgql-radau, bicgql-anorm, bicgql-l2, gmres-orig or gmres-mod.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Estimator delay.
    #[arg(long)]
    pub d: Option<usize>,
    /// Stop once the relative residual reaches this level.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance grid for stop-compare.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub tols: Vec<f64>,
    /// Stopping tolerance E in the delay-sweep worst-case bound.
    #[arg(long)]
    pub bound_tol: Option<f64>,
    #[arg(long)]
    pub max_it: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Right-hand sides per generated matrix in sweeps.
    #[arg(long)]
    pub rhs_per_matrix: Option<usize>,
    /// Delays for delay-sweep.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub d_grid: Vec<usize>,
    /// Fit the ur-sweep slope only over kappa_fwd in [lo, hi).
    #[arg(long, value_delimiter = ',', value_name = "LO,HI")]
    pub fit_range: Vec<f64>,
}

impl Settings {
    fn over(self, file: Settings) -> Settings {
        fn vec_or<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        Settings {
            config: self.config,
            matrix: self.matrix.or(file.matrix),
            gen: self.gen.or(file.gen),
            rhs: self.rhs.or(file.rhs),
            zero_start: self.zero_start || file.zero_start,
            suite: self.suite.or(file.suite),
            solver: self.solver.or(file.solver),
            estimator: self.estimator.or(file.estimator),
            d: self.d.or(file.d),
            tol: self.tol.or(file.tol),
            tols: vec_or(self.tols, file.tols),
            bound_tol: self.bound_tol.or(file.bound_tol),
            max_it: self.max_it.or(file.max_it),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            jobs: self.jobs.or(file.jobs),
            rhs_per_matrix: self.rhs_per_matrix.or(file.rhs_per_matrix),
            d_grid: vec_or(self.d_grid, file.d_grid),
            fit_range: vec_or(self.fit_range, file.fit_range),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    File(PathBuf),
    Generated(SpectrumSpec),
}

/// A generated family of matrices with log-spaced condition targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSpec {
    pub n: usize,
    pub count: usize,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub kind: SpectrumKind,
    pub nonnormality: f64,
}

impl SuiteSpec {
    /// Matrix `i` has seed `seed + i`.
    pub fn specs(&self, seed: u64) -> Vec<SpectrumSpec> {
        (0..self.count)
            .map(|i| SpectrumSpec::new(self.n, self.kappa_at(i), self.kind, self.nonnormality, seed + i as u64))
            .collect()
    }

    fn kappa_at(&self, i: usize) -> f64 {
        if self.count < 2 {
            return self.kappa_lo;
        }
        let (lo, hi) = (self.kappa_lo.log10(), self.kappa_hi.log10());
        10f64.powf(lo + (hi - lo) * i as f64 / (self.count - 1) as f64)
    }

    /// One bin per decade from `kappa_lo` to `kappa_hi`, `count` matrices each.
    /// Matrix `i` of the bin at `10^e` has seed `seed + 100·e + i`.
    pub fn bins(&self, seed: u64) -> Vec<(f64, Vec<SpectrumSpec>)> {
        let (lo, hi) = (self.kappa_lo.log10().round() as i32, self.kappa_hi.log10().round() as i32);
        (lo..=hi)
            .map(|e| {
                let kappa = 10f64.powi(e);
                let base = seed.wrapping_add((100 * e.max(0)) as u64);
                let specs = (0..self.count)
                    .map(|i| SpectrumSpec::new(self.n, kappa, self.kind, self.nonnormality, base + i as u64))
                    .collect();
                (kappa, specs)
            })
            .collect()
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Single-problem commands.
    pub source: Option<MatrixSource>,
    /// Sweep commands.
    pub suite: Option<SuiteSpec>,
    pub rhs: Option<PathBuf>,
    pub zero_start: bool,
    pub solver: SolverKind,
    pub estimator: EstimatorVariant,
    pub d: usize,
    pub tol: Option<f64>,
    pub tols: Vec<f64>,
    pub bound_tol: f64,
    pub max_it: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub rhs_per_matrix: usize,
    pub d_grid: Vec<usize>,
    pub fit_range: Option<(f64, f64)>,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_field<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, HarnessError> {
    s.trim().parse().map_err(|_| config_err(format!("{what}: cannot parse `{}`", s.trim())))
}

fn default_nonnormality(kind: SpectrumKind) -> f64 {
    if kind == SpectrumKind::Spd {
        0.0
    } else {
        0.1
    }
}

fn parse_gen(s: &str, seed: u64) -> Result<SpectrumSpec, HarnessError> {
    let f: Vec<&str> = s.split(',').collect();
    if !(3..=4).contains(&f.len()) {
        return Err(config_err(format!("--gen expects n,kappa,kind[,nonnormality], got `{s}`")));
    }
    let kind: SpectrumKind = f[2].trim().parse().map_err(config_err)?;
    let nu = f.get(3).map(|v| parse_field("nonnormality", v)).transpose()?.unwrap_or(default_nonnormality(kind));
    let spec = SpectrumSpec::new(parse_field("n", f[0])?, parse_field("kappa", f[1])?, kind, nu, seed);
    spec.validate().map_err(|e| config_err(format!("--gen: {e}")))?;
    Ok(spec)
}

fn parse_suite(s: &str) -> Result<SuiteSpec, HarnessError> {
    let f: Vec<&str> = s.split(',').collect();
    if !(5..=6).contains(&f.len()) {
        return Err(config_err(format!("--suite expects n,count,kappa_lo,kappa_hi,kind[,nonnormality], got `{s}`")));
    }
    let kind: SpectrumKind = f[4].trim().parse().map_err(config_err)?;
    let suite = SuiteSpec {
        n: parse_field("n", f[0])?,
        count: parse_field("count", f[1])?,
        kappa_lo: parse_field("kappa_lo", f[2])?,
        kappa_hi: parse_field("kappa_hi", f[3])?,
        kind,
        nonnormality: f
            .get(5)
            .map(|v| parse_field("nonnormality", v))
            .transpose()?
            .unwrap_or(default_nonnormality(kind)),
    };
    if suite.n == 0 || suite.count == 0 {
        return Err(config_err("--suite needs n ≥ 1 and count ≥ 1"));
    }
    if !(suite.kappa_lo >= 1.0 && suite.kappa_hi >= suite.kappa_lo && suite.kappa_hi.is_finite()) {
        return Err(config_err("--suite needs 1 ≤ kappa_lo ≤ kappa_hi"));
    }
    if !(suite.nonnormality >= 0.0) {
        return Err(config_err("--suite nonnormality must be non-negative"));
    }
    Ok(suite)
}

fn check_tol(what: &str, t: f64) -> Result<f64, HarnessError> {
    if t > 0.0 && t <= 1.0 {
        Ok(t)
    } else {
        Err(config_err(format!("{what} {t} outside (0, 1]")))
    }
}

fn default_estimator(solver: SolverKind) -> EstimatorVariant {
    match solver {
        SolverKind::Cg => EstimatorVariant::CgqlGauss,
        SolverKind::Bicg => EstimatorVariant::BicgqlL2,
        SolverKind::Gmres => EstimatorVariant::GmresModified,
    }
}

fn default_solver(v: EstimatorVariant) -> SolverKind {
    [SolverKind::Cg, SolverKind::Bicg, SolverKind::Gmres]
        .into_iter()
        .find(|&s| v.supports(s))
        .unwrap_or(SolverKind::Bicg)
}

fn load_file(path: &Path) -> Result<Settings, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub(crate) fn resolve_settings(command: CommandKind, flags: Settings) -> Result<RunConfig, HarnessError> {
    let s = match &flags.config {
        Some(path) => {
            let file = load_file(path)?;
            flags.over(file)
        }
        None => flags,
    };
    let seed = s.seed.unwrap_or(0);

    let sweep = matches!(command, CommandKind::UrSweep | CommandKind::DelaySweep | CommandKind::Bins);
    let (source, suite) = if sweep {
        if s.matrix.is_some() || s.gen.is_some() {
            return Err(config_err("sweeps take --suite, not --matrix or --gen"));
        }
        let spec = s.suite.as_deref().ok_or_else(|| config_err("sweeps need --suite"))?;
        (None, Some(parse_suite(spec)?))
    } else {
        if s.suite.is_some() {
            return Err(config_err("--suite applies to sweep commands only"));
        }
        let source = match (&s.matrix, &s.gen) {
            (Some(p), None) => MatrixSource::File(p.clone()),
            (None, Some(g)) => MatrixSource::Generated(parse_gen(g, seed)?),
            (Some(_), Some(_)) => return Err(config_err("give either --matrix or --gen, not both")),
            (None, None) => return Err(config_err("no matrix source: give --matrix or --gen")),
        };
        (Some(source), None)
    };

    let solver: Option<SolverKind> = s.solver.as_deref().map(str::parse).transpose().map_err(config_err)?;
    let estimator: Option<EstimatorVariant> = s.estimator.as_deref().map(str::parse).transpose().map_err(config_err)?;
    let (solver, estimator) = match (solver, estimator) {
        (Some(s), Some(e)) => (s, e),
        (Some(s), None) => (s, default_estimator(s)),
        (None, Some(e)) => (default_solver(e), e),
        (None, None) => (SolverKind::Bicg, EstimatorVariant::BicgqlL2),
    };
    if !estimator.supports(solver) {
        return Err(config_err(format!("estimator {estimator} cannot follow {solver}")));
    }

    let d = s.d.unwrap_or(DEFAULT_DELAY);
    if d == 0 {
        return Err(config_err("--d must be at least 1"));
    }
    let tol = s.tol.map(|t| check_tol("--tol", t)).transpose()?;
    let tols = s.tols.iter().map(|&t| check_tol("--tols entry", t)).collect::<Result<Vec<_>, _>>()?;
    let bound_tol = s.bound_tol.unwrap_or(1e-6);
    if !(bound_tol > 0.0 && bound_tol < 1.0) {
        return Err(config_err(format!("--bound-tol {bound_tol} outside (0, 1)")));
    }
    if s.max_it == Some(0) {
        return Err(config_err("--max-it must be positive"));
    }
    if s.jobs == Some(0) {
        return Err(config_err("--jobs must be positive"));
    }
    let rhs_per_matrix = s.rhs_per_matrix.unwrap_or(1);
    if rhs_per_matrix == 0 {
        return Err(config_err("--rhs-per-matrix must be positive"));
    }
    let fit_range = match s.fit_range.as_slice() {
        [] => None,
        &[lo, hi] if lo < hi => Some((lo, hi)),
        other => return Err(config_err(format!("--fit-range expects lo,hi with lo < hi, got {other:?}"))),
    };
    if command == CommandKind::StopCompare
        && matches!(estimator, EstimatorVariant::CgqlRadau | EstimatorVariant::CgqlRadauLower)
    {
        return Err(config_err("stop-compare takes cgql, bicgql or gmres estimators"));
    }

    Ok(RunConfig {
        command,
        source,
        suite,
        rhs: s.rhs,
        zero_start: s.zero_start,
        solver,
        estimator,
        d,
        tol,
        tols,
        bound_tol,
        max_it: s.max_it,
        seed,
        out: s.out,
        jobs: s.jobs,
        rhs_per_matrix,
        d_grid: s.d_grid,
        fit_range,
    })
}

pub(crate) fn parse_cli<I, T>(args: I) -> Result<RunConfig, HarnessError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(HarnessError::Cli)?;
    let (command, settings) = cli.command.split();
    resolve_settings(command, settings)
}
