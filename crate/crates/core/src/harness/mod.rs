//! Experiment commands behind the `krylov-errest` binary.
//!
//! Each `cmd_*` function turns a [`RunConfig`] into an [`ExperimentReport`],
//! a CSV-ready table. [`run_cli`] parses arguments, runs the command and
//! writes the table; [`main_exit`] adds the exit-code mapping.

mod commands;
mod config;
mod schema;

use std::ffi::OsString;
use std::io::Write as _;

pub use commands::{cmd_bins, cmd_delay_sweep, cmd_estimate, cmd_solve, cmd_stop_compare, cmd_ur_sweep, load_problem};
pub use config::{MatrixSource, RunConfig, SuiteSpec};
pub use schema::{schema_help, CommandKind};

/// Sweeps with a lower success fraction exit with code 5.
pub const SUCCESS_THRESHOLD: f64 = 0.9;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    MatrixFile {
        path: String,
        #[source]
        source: crate::matstore::MatrixError,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} of {total} runs failed")]
    PartialFailure { failed: usize, total: usize },
    #[error(transparent)]
    Cli(clap::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } | Self::MatrixFile { .. } => 3,
            Self::Numerical(_) => 4,
            Self::PartialFailure { .. } => 5,
            Self::Cli(e) => e.exit_code(),
        }
    }
}

/// Table produced by one command.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub command: CommandKind,
    pub rows: Vec<Vec<String>>,
    /// Comment lines written after the table, without the leading `# `.
    pub footer: Vec<String>,
    /// Runs attempted and runs that failed, for the partial-failure rule.
    pub runs: usize,
    pub failed_runs: usize,
}

impl ExperimentReport {
    pub(crate) fn new(command: CommandKind) -> Self {
        Self { command, rows: Vec::new(), footer: Vec::new(), runs: 0, failed_runs: 0 }
    }

    pub fn header(&self) -> &'static [&'static str] {
        self.command.columns()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // Writing into memory only fails on a ragged row, which is a bug.
        w.write_record(self.header()).expect("header");
        for r in &self.rows {
            assert_eq!(r.len(), self.header().len(), "ragged {} row", self.command.name());
            w.write_record(r).expect("row");
        }
        let mut out = w.into_inner().expect("flush to memory");
        for line in &self.footer {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        out
    }

    /// Whether too many runs failed.
    pub fn check_failures(&self) -> Result<(), HarnessError> {
        if self.runs > 0 && ((self.runs - self.failed_runs) as f64) < SUCCESS_THRESHOLD * self.runs as f64 {
            return Err(HarnessError::PartialFailure { failed: self.failed_runs, total: self.runs });
        }
        Ok(())
    }
}

pub fn run_command(cfg: &RunConfig) -> Result<ExperimentReport, HarnessError> {
    match cfg.command {
        CommandKind::Solve => cmd_solve(cfg),
        CommandKind::Estimate => cmd_estimate(cfg),
        CommandKind::UrSweep => cmd_ur_sweep(cfg),
        CommandKind::DelaySweep => cmd_delay_sweep(cfg),
        CommandKind::Bins => cmd_bins(cfg),
        CommandKind::StopCompare => cmd_stop_compare(cfg),
    }
}

/// Parses arguments (program name first) and the optional config file.
pub fn resolve<I, T>(args: I) -> Result<RunConfig, HarnessError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    config::parse_cli(args)
}

/// Resolves, runs and writes the CSV. The table is written even when the
/// partial-failure rule then turns the result into an error.
pub fn run_cli<I, T>(args: I) -> Result<ExperimentReport, HarnessError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = resolve(args)?;
    let report = run_command(&cfg)?;
    let bytes = report.to_csv();
    match &cfg.out {
        Some(path) => std::fs::write(path, &bytes)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?,
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|source| HarnessError::Io { path: "<stdout>".into(), source })?,
    }
    report.check_failures()?;
    Ok(report)
}

/// [`run_cli`] with errors printed to stderr and mapped to exit codes.
pub fn main_exit<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_cli(args) {
        Ok(_) => 0,
        Err(HarnessError::Cli(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("krylov-errest: {e}");
            e.exit_code()
        }
    }
}
