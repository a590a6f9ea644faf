use std::fs;
use std::path::Path;
use std::process::Command;

use sstep_cg::basis::BasisKind;
use sstep_cg::harness::{
    grid_cells, read_rows, run_grid, EpsMode, ExperimentSpec, MatrixSource, ResultRow, TRACE_HEADER,
};
use sstep_cg::trace::SolverKind;

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        matrices: vec![
            MatrixSource::parse("gallery:grid9-12").unwrap(),
            MatrixSource::parse("gallery:laplace1d-60 lap").unwrap(),
        ],
        algorithms: SolverKind::all().to_vec(),
        s_values: vec![3, 6],
        eps_modes: vec![EpsMode::HscgAttainable, EpsMode::Fixed(1e-6)],
        basis_kinds: vec![BasisKind::Newton, BasisKind::Chebyshev],
        ..ExperimentSpec::default()
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn identical_specs_give_identical_files() {
    let spec = small_spec();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_grid(&spec, d1.path()).unwrap();
    run_grid(&spec, d2.path()).unwrap();
    assert_eq!(
        fs::read(d1.path().join("results.csv")).unwrap(),
        fs::read(d2.path().join("results.csv")).unwrap()
    );
    let (t1, t2) = (
        read_dir_sorted(&d1.path().join("traces")),
        read_dir_sorted(&d2.path().join("traces")),
    );
    assert!(!t1.is_empty());
    assert_eq!(t1, t2);
}

#[test]
fn one_row_per_cell_with_consistent_counts() {
    let spec = small_spec();
    let dir = tempfile::tempdir().unwrap();
    let res = run_grid(&spec, dir.path()).unwrap();
    // per matrix and eps mode: 1 CG + 2 sstep + 2 old + 2 * 2 improved
    assert_eq!(grid_cells(&spec).len(), 2 * 2 * 9);
    assert_eq!(res.rows.len(), grid_cells(&spec).len());
    assert_eq!(read_rows(dir.path().join("results.csv")).unwrap(), res.rows);

    for (row, trace) in res.rows.iter().zip(&res.traces) {
        let trace = trace.as_ref().expect("generated matrices always load");
        assert!(row.error.is_empty(), "{row:?}");
        assert_eq!(row.total_outer, row.outer_marks, "{row:?}");
        assert_eq!(trace.outer_marks.len(), trace.total_outer);
        let csv = fs::read_to_string(dir.path().join(&row.trace_file)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
        assert_eq!(lines.count(), row.total_iters);
        if row.outcome == "converged" {
            assert!(row.final_true_resid <= row.eps_star, "{row:?}");
            assert_eq!(row.cell, format!("{} ({})", row.total_outer, row.total_iters));
        }
    }
}

#[test]
fn improved_rows_reach_target_on_easy_problems() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_grid(&small_spec(), dir.path()).unwrap();
    let improved: Vec<&ResultRow> = res.rows.iter().filter(|r| r.algorithm == "adaptive-improved").collect();
    assert_eq!(improved.len(), 16);
    for r in improved {
        if r.eps_mode == "hscg-attainable" {
            assert!(r.final_true_resid <= 10.0 * r.eps_star, "{r:?}");
        } else {
            assert_eq!(r.outcome, "converged", "{r:?}");
        }
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sstep-cg"))
}

#[test]
fn cli_grid_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("grid.spec");
    fs::write(
        &spec,
        "# tiny grid\nmatrix = gallery:grid9-8\nalgorithms = hscg, adaptive-improved\ns_values = 4\neps_modes = 1e-6\nbasis_kinds = newton\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let st = bin()
        .args(["grid", "--spec"])
        .arg(&spec)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let table = String::from_utf8(st.stdout).unwrap();
    assert!(table.contains("### grid9-8, eps* = 1.0e-06"), "{table}");
    assert!(out.join("summary.md").exists());

    let rep = bin()
        .args(["report", "--format", "csv", "--rows"])
        .arg(out.join("results.csv"))
        .output()
        .unwrap();
    assert!(rep.status.success());
    let csv = String::from_utf8(rep.stdout).unwrap();
    assert!(csv.starts_with("matrix,eps_star,algorithm,s=4\n"), "{csv}");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn cli_solve_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let st = bin()
        .args([
            "solve",
            "--matrix",
            "gallery:laplace2d-10",
            "--alg",
            "sstep",
            "--s",
            "4",
            "--eps-star",
            "1e-8",
        ])
        .arg("--trace-out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let text = String::from_utf8(st.stdout).unwrap();
    assert!(text.contains("result"), "{text}");
    assert!(fs::read_to_string(&trace)
        .unwrap()
        .starts_with("global_iter,outer_iter,s_k,"));
}

#[test]
fn cli_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.spec");
    fs::write(&bad, "matrix = gallery:grid9-8\nalgorithms = hscg\nbogus = 1\n").unwrap();
    let st = bin()
        .args(["grid", "--spec"])
        .arg(&bad)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!st.status.success());
    assert!(String::from_utf8_lossy(&st.stderr).contains("bad.spec:3"));

    let st = bin().args(["solve", "--matrix", "/nonexistent.mtx"]).output().unwrap();
    assert!(!st.status.success());

    let st = bin().args(["report", "--rows", "/nonexistent.csv"]).output().unwrap();
    assert!(!st.status.success());
}

#[test]
fn missing_matrix_cells_still_produce_rows() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        matrices: vec![MatrixSource::parse("/nonexistent/nos1.mtx nos1").unwrap()],
        algorithms: vec![SolverKind::Hscg, SolverKind::AdaptiveImproved],
        s_values: vec![10],
        eps_modes: vec![EpsMode::Fixed(1e-6)],
        ..ExperimentSpec::default()
    };
    let res = run_grid(&spec, dir.path()).unwrap();
    assert_eq!(res.rows.len(), 3);
    assert!(res.rows.iter().all(|r| r.outcome == "error" && r.matrix == "nos1"));
}
