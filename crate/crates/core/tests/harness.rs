use std::path::{Path, PathBuf};
use std::process::Command;

use krylov_errest::harness::{main_exit, resolve, run_cli, HarnessError};
use krylov_errest::matstore::{mm_write, MarketLayout};
use krylov_errest::DenseMatrix;

fn run(args: &[&str]) -> Result<(), HarnessError> {
    let mut v = vec!["krylov-errest"];
    v.extend_from_slice(args);
    run_cli(v).map(|_| ())
}

fn code(args: &[&str]) -> i32 {
    let mut v = vec!["krylov-errest"];
    v.extend_from_slice(args);
    main_exit(v)
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Header plus data rows, comment rows removed.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn identity_file(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("eye.mtx");
    mm_write(&path, &DenseMatrix::identity(n), MarketLayout::Coordinate).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identity_estimate_has_single_exact_row() {
    let dir = tempfile::tempdir().unwrap();
    let m = identity_file(dir.path(), 3);
    let out = dir.path().join("est.csv");
    run(&["estimate", "--matrix", s(&m), "--solver", "cg", "--estimator", "cgql", "--d", "1", "--out", s(&out)])
        .unwrap();
    let (h, rows) = table(&read(&out));
    assert_eq!(h, ["k", "res_rel", "err_rel", "est_rel", "est_companion_rel", "trigger", "flags"]);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!(r[col(&h, "k")], "0");
    let (err, est) = (num(&r[col(&h, "err_rel")]), num(&r[col(&h, "est_rel")]));
    assert!((err - est).abs() <= 1e-12 * err, "{err} vs {est}");
}

#[test]
fn gmres_estimate_reports_both_variants() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    run(&["estimate", "--gen", "60,1e4,pd,0.1", "--solver", "gmres", "--estimator", "gmres-mod", "--out", s(&out)])
        .unwrap();
    let (h, rows) = table(&read(&out));
    assert!(rows.len() > 10);
    for r in &rows {
        assert_eq!(r.len(), h.len());
        let est = &r[col(&h, "est_rel")];
        let alt = &r[col(&h, "est_companion_rel")];
        if est != "nan" {
            assert!(alt != "nan" && num(est) >= 0.0 && num(alt) >= 0.0);
        } else {
            assert!(r[col(&h, "flags")].contains("withheld"));
        }
        assert!(matches!(r[col(&h, "trigger")].as_str(), "0" | "1"));
    }
}

#[test]
fn identity_stop_compare_has_no_losses() {
    let dir = tempfile::tempdir().unwrap();
    let m = identity_file(dir.path(), 4);
    let out = dir.path().join("stop.csv");
    run(&["stop-compare", "--matrix", s(&m), "--solver", "bicg", "--tols", "1e-2,1e-6", "--out", s(&out)]).unwrap();
    let (h, rows) = table(&read(&out));
    assert_eq!(rows.len(), 2 * 3, "two tolerances by three policies");
    for r in &rows {
        assert_eq!(r[col(&h, "accuracy_loss")], "0");
        assert_eq!(r[col(&h, "computation_loss")], "0");
        assert_eq!(r[col(&h, "stop")], "1");
    }
}

#[test]
fn residual_stop_is_further_from_estimator_than_truth_is() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stop.csv");
    for seed in ["0", "1", "2"] {
        run(&["stop-compare", "--gen", "100,1e6,pd,0.1", "--seed", seed, "--tols", "1e-4", "--out", s(&out)]).unwrap();
        let (h, rows) = table(&read(&out));
        let r = &rows[0];
        let idx = |c: &str| num(&r[col(&h, c)]);
        let (res, est, tru) = (idx("i_res"), idx("i_est"), idx("i_true"));
        assert!((res - est).abs() >= (tru - est).abs(), "seed {seed}: res {res} est {est} true {tru}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let base = ["ur-sweep", "--suite", "40,8,1e2,1e5,indefinite,0.1", "--seed", "5"];
    let with = |out: &Path, jobs: &str| {
        let mut v = base.to_vec();
        v.extend_from_slice(&["--jobs", jobs, "--out", s(out)]);
        run(&v).unwrap();
    };
    with(&a, "1");
    with(&b, "4");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    for path in [&a, &b] {
        run(&["estimate", "--gen", "50,1e3,indefinite,0.1", "--seed", "9", "--out", s(path)]).unwrap();
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn ur_sweep_schema_and_footer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ur.csv");
    run(&["ur-sweep", "--suite", "40,6,1e2,1e4,indefinite", "--rhs-per-matrix", "2", "--out", s(&out)]).unwrap();
    let text = read(&out);
    let (h, rows) = table(&text);
    for c in ["index", "label", "kappa_fwd", "kappa_f_fwd", "ur1", "ur2", "e_ur1", "e_ur2", "status"] {
        col(&h, c);
    }
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.len() == h.len()));
    let footer = text.lines().last().unwrap();
    assert!(footer.starts_with("# slope="), "{footer}");
    let indices: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(indices.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn failed_sweep_rows_are_flagged_and_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ur.csv");
    // CG breaks down on indefinite matrices.
    let c = code(&[
        "ur-sweep",
        "--suite",
        "30,4,1e2,1e3,indefinite",
        "--solver",
        "cg",
        "--estimator",
        "bicgql-l2",
        "--out",
        s(&out),
    ]);
    assert_eq!(c, 5);
    let (h, rows) = table(&read(&out));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[col(&h, "status")], "failed");
        assert_eq!(r[col(&h, "ur1")], "nan");
        assert!(!r[col(&h, "error")].is_empty());
    }
}

#[test]
fn delay_sweep_rows_follow_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("delay.csv");
    run(&["delay-sweep", "--suite", "40,3,1e3,1e3,pd", "--d-grid", "1,2,5", "--out", s(&out)]).unwrap();
    let (h, rows) = table(&read(&out));
    assert_eq!(rows.iter().map(|r| r[col(&h, "d")].as_str()).collect::<Vec<_>>(), ["1", "2", "5"]);
    for r in &rows {
        assert!((num(&r[col(&h, "d_over_n")]) * 40.0 - num(&r[col(&h, "d")])).abs() < 1e-12);
        assert!(num(&r[col(&h, "e_ur1_norm")]) > 0.0 && num(&r[col(&h, "ub2_norm")]) > 0.0);
    }
}

#[test]
fn bins_give_one_row_per_decade() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bins.csv");
    run(&["bins", "--suite", "30,2,1e1,1e6,indefinite,0.1", "--rhs-per-matrix", "2", "--d", "5", "--out", s(&out)])
        .unwrap();
    let (h, rows) = table(&read(&out));
    assert_eq!(rows.len(), 6);
    for (j, r) in rows.iter().enumerate() {
        assert_eq!(num(&r[col(&h, "kappa")]), 10f64.powi(j as i32 + 1));
        assert_eq!(r[col(&h, "runs")], "4");
    }
}

#[test]
fn solve_writes_a_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve.csv");
    run(&["solve", "--gen", "30,1e2,spd", "--solver", "cg", "--tol", "1e-8", "--out", s(&out)]).unwrap();
    let (h, rows) = table(&read(&out));
    assert_eq!(h, ["k", "res_rel", "err_rel", "x_norm", "flags"]);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
    }
    assert!(num(&rows.last().unwrap()[1]) <= 1e-8);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "gen = \"20,10,spd\"\nd = 3\nseed = 4\nsolver = \"cg\"\n").unwrap();
    let c = resolve(["krylov-errest", "estimate", "--config", s(&cfg)]).unwrap();
    assert_eq!((c.d, c.seed), (3, 4));
    let c = resolve(["krylov-errest", "estimate", "--config", s(&cfg), "--d", "2"]).unwrap();
    assert_eq!((c.d, c.seed), (2, 4));

    std::fs::write(&cfg, "dee = 3\n").unwrap();
    let e = resolve(["krylov-errest", "estimate", "--config", s(&cfg)]).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = s(&out);
    assert_eq!(code(&["estimate", "--out", o]), 2, "no matrix source");
    assert_eq!(code(&["estimate", "--gen", "10,10,spd", "--matrix", "a.mtx", "--out", o]), 2);
    assert_eq!(code(&["estimate", "--gen", "10,10,spd", "--solver", "gmres", "--estimator", "cgql", "--out", o]), 2);
    assert_eq!(code(&["estimate", "--gen", "10,10,spd", "--d", "0", "--out", o]), 2);
    assert_eq!(code(&["estimate", "--gen", "10,10,spd", "--tol", "2", "--out", o]), 2);
    assert_eq!(code(&["estimate", "--gen", "10,ten,spd", "--out", o]), 2);
    assert_eq!(code(&["ur-sweep", "--out", o]), 2, "no suite");
}

#[test]
fn missing_oracle_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("sing.mtx");
    std::fs::write(&m, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n").unwrap();
    assert_eq!(code(&["estimate", "--matrix", s(&m), "--out", s(&dir.path().join("o.csv"))]), 4);
}

#[test]
fn unreadable_matrix_names_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("bad.mtx");
    std::fs::write(&m, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 x 1.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_krylov-errest"))
        .args(["estimate", "--matrix", s(&m), "--out", s(&dir.path().join("o.csv"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(s(&m)) && msg.contains("line 4"), "{msg}");

    let gone = dir.path().join("missing.mtx");
    assert_eq!(code(&["solve", "--matrix", s(&gone), "--out", s(&dir.path().join("o.csv"))]), 3);
}

#[test]
fn help_documents_schemas() {
    let out = Command::new(env!("CARGO_BIN_EXE_krylov-errest")).args(["estimate", "--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("k,res_rel,err_rel,est_rel,est_companion_rel,trigger,flags"), "{text}");
}

#[test]
fn docs_file_lists_every_header() {
    let docs = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/csv-schemas.md")).unwrap();
    for cmd in krylov_errest::harness::CommandKind::ALL {
        let header = cmd.columns().join(",");
        assert!(docs.contains(&header), "{} header missing: {header}", cmd.name());
    }
}
