//! Column layouts of every command's CSV output.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Estimate,
    UrSweep,
    DelaySweep,
    Bins,
    StopCompare,
}

impl CommandKind {
    pub const ALL: [CommandKind; 6] =
        [Self::Solve, Self::Estimate, Self::UrSweep, Self::DelaySweep, Self::Bins, Self::StopCompare];

    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Estimate => "estimate",
            Self::UrSweep => "ur-sweep",
            Self::DelaySweep => "delay-sweep",
            Self::Bins => "bins",
            Self::StopCompare => "stop-compare",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Self::Solve => &["k", "res_rel", "err_rel", "x_norm", "flags"],
            Self::Estimate => &["k", "res_rel", "err_rel", "est_rel", "est_companion_rel", "trigger", "flags"],
            Self::UrSweep => &[
                "index",
                "label",
                "n",
                "d",
                "kappa_fwd",
                "kappa_f_fwd",
                "ur1",
                "ur2",
                "included",
                "skipped",
                "e_ur1",
                "e_ur2",
                "status",
                "error",
            ],
            Self::DelaySweep => &[
                "d",
                "d_over_n",
                "samples",
                "failures",
                "ur1_norm",
                "ur2_norm",
                "e_ur1_norm",
                "e_ur2_norm",
                "ub1_norm",
                "ub2_norm",
                "flags",
            ],
            Self::Bins => &["kappa", "runs", "failures", "terms", "mean_rel_error", "status"],
            Self::StopCompare => &[
                "tol",
                "policy",
                "stop",
                "satisfied",
                "i_res",
                "i_est",
                "i_true",
                "accuracy_loss",
                "computation_loss",
                "delta_rel",
                "flags",
            ],
        }
    }

    fn notes(self) -> &'static str {
        match self {
            Self::Solve => {
                "One row per iterate k = 0..m. res_rel = ‖r_k‖/‖b‖, err_rel = ‖x − x_k‖/‖x‖ against the direct \
                 solve (nan with flag no_oracle when the system cannot be solved directly), x_norm = ‖x_k‖. \
                 --tol stops at that relative residual; --max-it defaults to n for gmres and 4n otherwise."
            }
            Self::Estimate => {
                "One row per iterate k = 0..m−d−1. err_rel and est_rel are measured in the estimator's norm \
                 (A-measure for cgql and bicgql-anorm, l2 otherwise) and divided by the oracle ‖x‖ in that norm. \
                 est_companion_rel is the other gmres variant, or the Gauss–Radau upper estimate next to cgql on \
                 SPD input; nan with flag no_companion elsewhere. trigger is 1 once the gmres precision trigger \
                 has latched by iteration k+d. Flags: withheld, negative, no_companion."
            }
            Self::UrSweep => {
                "One row per (matrix, right-hand side), ordered by index. Matrix i of --suite has seed \
                 seed+i and log-spaced kappa target. kappa_fwd is κ(A,x) (A-measure form for A-measure \
                 estimators), kappa_f_fwd is κ_F(A,x). e_ur1, e_ur2 are the isotropic-error expectations. \
                 status is ok or failed; failed rows carry nan and the error text. The last line is the \
                 comment `# slope=<value>` with the decade-bucketed log-log slope of ur1 against kappa_fwd \
                 (nan when fewer than two buckets). --tol is the run's stop level (default 1e-10)."
            }
            Self::DelaySweep => {
                "One row per d of --d-grid (default 1,5,10,20,30 up to n/2). ur1_norm = mean U.R.⁽¹⁾/κ_F and \
                 ur2_norm = mean U.R.⁽²⁾/κ_F²; e_* are the expectation curves and ub_* the worst-case bounds at \
                 E = --bound-tol (default 1e-6), both normalised the same way. Flag no_samples when every run \
                 failed."
            }
            Self::Bins => {
                "One row per decade of kappa from kappa_lo to kappa_hi of --suite, count matrices per bin and \
                 --rhs-per-matrix canonical right-hand sides each, run with bicg and bicgql-l2. mean_rel_error \
                 averages |χ_k/‖ε_k‖ − 1| over all emitted estimates. status is ok or empty."
            }
            Self::StopCompare => {
                "One row per (tol, policy) with policy relative_residual, estimator_relative_error or \
                 oracle_relative_error. stop and satisfied come from running the solver under that policy; \
                 i_res, i_est, i_true, the losses and delta_rel = |i_res − i_est|/n come from one full run \
                 and repeat across the policies of a tolerance. Unreached indices are nan with flags \
                 not_reached or losses_undefined. --tols defaults to 1e-2,1e-3,…,1e-8."
            }
        }
    }
}

/// `--help` epilogue: header line and column notes.
pub fn schema_help(cmd: CommandKind) -> String {
    format!(
        "CSV output:\n  {}\n\n{}\n\nNumbers use 17 significant digits in scientific notation; missing values are the \
         token nan. Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical failure, 5 more than \
         10% of sweep runs failed.",
        cmd.columns().join(","),
        cmd.notes()
    )
}
