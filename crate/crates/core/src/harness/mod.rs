//! Experiment driver: grids of solver runs, trace CSVs and summary tables.

mod spec;

pub use spec::{
    gallery_matrix, load_matrix, matrix_dir, EpsMode, ExperimentSpec, MatrixSource, DEFAULT_MATRIX_DIR, MATRIX_DIR_ENV,
};

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_solve, AdaptiveConfig, Variant};
use crate::basis::{BasisKind, LEJA_GRID};
use crate::error::{Error, Result};
use crate::hscg::{default_max_iters, hscg_attainable_accuracy, hscg_solve};
use crate::matio::ProblemInstance;
use crate::ritz::CStrategy;
use crate::sstep::{sstep_solve, ParamsSource};
use crate::trace::{attained_accuracy_report, sci1, Outcome, SolveTrace, SolverKind};

/// One solver configuration to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: SolverKind,
    /// `s` for fixed s-step, `sigma` for the adaptive variants.
    pub s: usize,
    pub basis: BasisKind,
    pub c_strategy: CStrategy,
    /// Growth per outer loop; `None` means `f = sigma`.
    pub f: Option<usize>,
    pub s_bar0: usize,
    pub max_outer: Option<usize>,
    pub max_iters: Option<usize>,
}

impl RunConfig {
    pub fn new(algorithm: SolverKind, s: usize) -> Self {
        let (basis, c_strategy) = match algorithm {
            SolverKind::AdaptiveImproved => (BasisKind::Newton, CStrategy::Adaptive),
            SolverKind::AdaptiveOld => (BasisKind::Monomial, CStrategy::Unit),
            _ => (BasisKind::Monomial, CStrategy::Adaptive),
        };
        Self {
            algorithm,
            s,
            basis,
            c_strategy,
            f: None,
            s_bar0: 1,
            max_outer: None,
            max_iters: None,
        }
    }

    pub fn with_basis(mut self, basis: BasisKind) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_c_strategy(mut self, c: CStrategy) -> Self {
        self.c_strategy = c;
        self
    }
}

/// Runs one configuration on a prepared problem.
pub fn run_solver(p: &ProblemInstance, cfg: &RunConfig, eps_star: f64) -> Result<(Vec<f64>, SolveTrace)> {
    let cap = cfg.max_iters.unwrap_or_else(|| default_max_iters(p.n()));
    let max_outer = cfg.max_outer.unwrap_or(cap);
    let (x, trace, _) = match cfg.algorithm {
        SolverKind::Hscg => hscg_solve(p, eps_star, cap)?,
        SolverKind::Sstep => sstep_solve(p, cfg.s, &ParamsSource::Exact(cfg.basis), eps_star, max_outer)?,
        SolverKind::AdaptiveOld | SolverKind::AdaptiveImproved => {
            let variant = if cfg.algorithm == SolverKind::AdaptiveOld {
                Variant::Old
            } else {
                Variant::Improved
            };
            let fixed_bounds =
                (variant == Variant::Old && cfg.basis != BasisKind::Monomial).then_some((p.lambda_min, p.norm_a));
            let acfg = AdaptiveConfig {
                sigma: cfg.s,
                s_bar0: cfg.s_bar0.min(cfg.s),
                f: cfg.f.unwrap_or(cfg.s),
                eps_star,
                basis_kind: cfg.basis,
                c_strategy: cfg.c_strategy,
                variant,
                max_outer,
                leja_grid: LEJA_GRID,
                fixed_bounds,
            };
            adaptive_solve(p, &acfg)?
        }
    };
    Ok((x, trace))
}

/// Rounds up to two significant digits, e.g. `3.403e-14 -> 3.5e-14`.
pub fn round_up_2sig(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return v;
    }
    let e = v.log10().floor() as i32 - 1;
    let scale = 10f64.powi(e);
    let mut r: f64 = format!("{:.0}e{}", (v / scale).ceil(), e).parse().unwrap_or(v);
    if r < v {
        r = format!("{:.0}e{}", (v / scale).ceil() + 1.0, e).parse().unwrap_or(v);
    }
    r
}

/// Target for an eps mode: fixed, or CG's attainable accuracy rounded up to
/// two significant digits.
pub fn resolve_eps(p: &ProblemInstance, mode: EpsMode) -> Result<f64> {
    match mode {
        EpsMode::Fixed(v) => Ok(v),
        EpsMode::HscgAttainable => {
            let m = hscg_attainable_accuracy(p, default_max_iters(p.n()))?;
            Ok(round_up_2sig(m.max(f64::MIN_POSITIVE)))
        }
    }
}

/// Summary of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub matrix: String,
    pub algorithm: String,
    pub basis: String,
    pub c_strategy: String,
    /// `s` or `sigma`; empty for CG.
    pub s: Option<usize>,
    pub eps_mode: String,
    pub eps_star: f64,
    pub cell: String,
    /// `converged`, `stagnated`, `diverged` or `error`.
    pub outcome: String,
    pub total_iters: usize,
    pub total_outer: usize,
    pub outer_marks: usize,
    pub final_true_resid: f64,
    pub mean_s: f64,
    pub error: String,
    pub trace_file: String,
}

impl ResultRow {
    fn from_trace(base: ResultRow, trace: &SolveTrace) -> Self {
        let outcome = attained_accuracy_report(trace);
        ResultRow {
            cell: outcome.cell(),
            outcome: match outcome {
                Outcome::Converged { .. } => "converged",
                Outcome::Stagnated { .. } => "stagnated",
                Outcome::Diverged => "diverged",
            }
            .to_string(),
            total_iters: trace.total_iters,
            total_outer: trace.total_outer,
            outer_marks: trace.outer_marks.len(),
            final_true_resid: trace.final_true_resid(),
            mean_s: trace.mean_s(),
            ..base
        }
    }

    fn failed(base: ResultRow, err: &Error) -> Self {
        ResultRow {
            cell: "error".to_string(),
            outcome: "error".to_string(),
            error: err.to_string(),
            ..base
        }
    }

    /// Row label in summary tables.
    pub fn display_algorithm(&self) -> String {
        match self.algorithm.as_str() {
            "adaptive-improved" => format!("{} ({}, c={})", self.algorithm, self.basis, self.c_strategy),
            "adaptive-old" if self.c_strategy != "unit" || self.basis != "monomial" => {
                format!("{} ({}, c={})", self.algorithm, self.basis, self.c_strategy)
            }
            "sstep" if self.basis != "monomial" => format!("{} ({})", self.algorithm, self.basis),
            _ => self.algorithm.clone(),
        }
    }
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub matrix: usize,
    pub eps_mode: EpsMode,
    pub config: RunConfig,
}

/// Cells in deterministic order: matrix, eps mode, algorithm, s, basis, c.
pub fn grid_cells(spec: &ExperimentSpec) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for mi in 0..spec.matrices.len() {
        for &eps_mode in &spec.eps_modes {
            for &alg in &spec.algorithms {
                let mut push = |s: usize, basis: BasisKind, c: CStrategy| {
                    let mut cfg = RunConfig::new(alg, s).with_basis(basis).with_c_strategy(c);
                    cfg.f = spec.f;
                    cfg.s_bar0 = spec.s_bar0;
                    cfg.max_outer = spec.max_outer;
                    cfg.max_iters = spec.max_iters;
                    cells.push(GridCell {
                        matrix: mi,
                        eps_mode,
                        config: cfg,
                    });
                };
                match alg {
                    SolverKind::Hscg => push(1, BasisKind::Monomial, CStrategy::Adaptive),
                    SolverKind::Sstep => {
                        for &s in &spec.s_values {
                            push(s, spec.fixed_basis, CStrategy::Adaptive);
                        }
                    }
                    SolverKind::AdaptiveOld => {
                        for &s in &spec.s_values {
                            push(s, spec.fixed_basis, spec.old_c_strategy);
                        }
                    }
                    SolverKind::AdaptiveImproved => {
                        for &s in &spec.s_values {
                            for &b in &spec.basis_kinds {
                                for &c in &spec.c_strategies {
                                    push(s, b, c);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    cells
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn trace_name(label: &str, cell: &GridCell) -> String {
    let c = &cell.config;
    let mut name = format!("{}__{}", sanitize(label), c.algorithm.name());
    if c.algorithm != SolverKind::Hscg {
        name += &format!("__s{}__{}", c.s, c.basis.name());
    }
    if matches!(c.algorithm, SolverKind::AdaptiveOld | SolverKind::AdaptiveImproved) {
        name += &format!("__c-{}", c.c_strategy.name());
    }
    name += &format!("__eps-{}.csv", sanitize(&cell.eps_mode.label()));
    name
}

/// Result of a grid run: one row per cell, in cell order.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<Option<SolveTrace>>,
}

/// Runs every cell of `spec`, writing per-run traces under
/// `out_dir/traces/` and `out_dir/results.csv`. Cell failures are recorded
/// in their rows; only I/O failures on the output abort.
pub fn run_grid(spec: &ExperimentSpec, out_dir: impl AsRef<Path>) -> Result<GridResult> {
    spec.validate()?;
    let out_dir = out_dir.as_ref();
    let trace_dir = out_dir.join("traces");
    std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;

    let problems: Vec<std::result::Result<ProblemInstance, String>> = spec
        .matrices
        .par_iter()
        .map(|m| {
            m.load()
                .and_then(|a| ProblemInstance::from_matrix(&a, m.label.clone()))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut eps_keys = Vec::new();
    for mi in 0..spec.matrices.len() {
        for &mode in &spec.eps_modes {
            eps_keys.push((mi, mode));
        }
    }
    let eps_values: Vec<std::result::Result<f64, String>> = eps_keys
        .par_iter()
        .map(|&(mi, mode)| match &problems[mi] {
            Ok(p) => resolve_eps(p, mode).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        })
        .collect();
    let eps_for = |mi: usize, mode: EpsMode| -> &std::result::Result<f64, String> {
        let idx = eps_keys.iter().position(|&k| k == (mi, mode)).expect("key present");
        &eps_values[idx]
    };

    let cells = grid_cells(spec);
    let results: Vec<(ResultRow, Option<SolveTrace>)> = cells
        .par_iter()
        .map(|cell| {
            let src = &spec.matrices[cell.matrix];
            let cfg = &cell.config;
            let base = ResultRow {
                matrix: src.label.clone(),
                algorithm: cfg.algorithm.name().to_string(),
                basis: cfg.basis.name().to_string(),
                c_strategy: cfg.c_strategy.name().to_string(),
                s: (cfg.algorithm != SolverKind::Hscg).then_some(cfg.s),
                eps_mode: cell.eps_mode.label(),
                eps_star: f64::NAN,
                cell: String::new(),
                outcome: String::new(),
                total_iters: 0,
                total_outer: 0,
                outer_marks: 0,
                final_true_resid: f64::NAN,
                mean_s: 0.0,
                error: String::new(),
                trace_file: String::new(),
            };
            let problem = match &problems[cell.matrix] {
                Ok(p) => p,
                Err(e) => return (ResultRow::failed(base, &Error::Config(e.clone())), None),
            };
            let eps = match eps_for(cell.matrix, cell.eps_mode) {
                Ok(v) => *v,
                Err(e) => return (ResultRow::failed(base, &Error::Config(e.clone())), None),
            };
            let base = ResultRow { eps_star: eps, ..base };
            match run_solver(problem, cfg, eps) {
                Ok((_, trace)) => {
                    let mut row = ResultRow::from_trace(base, &trace);
                    if spec.write_traces {
                        let name = trace_name(&src.label, cell);
                        let path = trace_dir.join(&name);
                        match emit_trace_csv(&trace, &path) {
                            Ok(()) => row.trace_file = format!("traces/{name}"),
                            Err(e) => row.error = e.to_string(),
                        }
                    }
                    (row, Some(trace))
                }
                Err(e) => (ResultRow::failed(base, &e), None),
            }
        })
        .collect();

    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    write_rows(&rows, out_dir.join("results.csv"))?;
    Ok(GridResult { rows, traces })
}

/// Header of trace CSV files.
pub const TRACE_HEADER: [&str; 9] = [
    "global_iter",
    "outer_iter",
    "s_k",
    "rel_true_resid",
    "rel_upd_resid",
    "resid_gap",
    "lambda_min_est",
    "lambda_max_est",
    "c_value",
];

/// 17 significant digits.
fn full(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Writes one row per global iteration.
pub fn emit_trace_csv(trace: &SolveTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TRACE_HEADER)?;
    for i in 0..trace.total_iters {
        w.write_record([
            i.to_string(),
            trace.outer_index[i].to_string(),
            trace.s_k[i].to_string(),
            full(trace.true_resid[i]),
            full(trace.upd_resid[i]),
            full(trace.resid_gap[i]),
            full(trace.lambda_min[i]),
            full(trace.lambda_max[i]),
            full(trace.c_values[i]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_rows(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(Error::Config(format!("unknown table format '{other}'"))),
        }
    }
}

struct Group<'a> {
    matrix: &'a str,
    eps_star: f64,
    eps_mode: &'a str,
    rows: Vec<&'a ResultRow>,
}

fn groups(rows: &[ResultRow]) -> Vec<Group<'_>> {
    let mut out: Vec<Group<'_>> = Vec::new();
    for r in rows {
        let same = |g: &Group<'_>| {
            g.matrix == r.matrix && g.eps_mode == r.eps_mode && (g.eps_star.to_bits() == r.eps_star.to_bits())
        };
        match out.iter_mut().find(|g| same(g)) {
            Some(g) => g.rows.push(r),
            None => out.push(Group {
                matrix: &r.matrix,
                eps_star: r.eps_star,
                eps_mode: &r.eps_mode,
                rows: vec![r],
            }),
        }
    }
    out
}

/// Table body for one group: column `s` values and per-algorithm cells.
fn layout(g: &Group<'_>) -> (Vec<usize>, Vec<(String, Vec<String>)>) {
    let cols: Vec<usize> = g
        .rows
        .iter()
        .filter_map(|r| r.s)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut lines: Vec<(String, Vec<String>)> = Vec::new();
    for r in &g.rows {
        let label = r.display_algorithm();
        let idx = match lines.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                lines.push((label, vec![String::new(); cols.len().max(1)]));
                lines.len() - 1
            }
        };
        match r.s {
            Some(s) => {
                let c = cols.iter().position(|&v| v == s).expect("column present");
                lines[idx].1[c] = r.cell.clone();
            }
            None => {
                for cell in &mut lines[idx].1 {
                    *cell = r.cell.clone();
                }
            }
        }
    }
    (cols, lines)
}

fn eps_text(g: &Group<'_>) -> String {
    if g.eps_star.is_finite() {
        sci1(g.eps_star)
    } else {
        "n/a".to_string()
    }
}

/// Renders one table per `(matrix, eps*)` group: algorithms as rows, `s`
/// values as columns.
pub fn render_summary_table(rows: &[ResultRow], format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no result rows to tabulate".into()));
    }
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            for (gi, g) in groups(rows).iter().enumerate() {
                let (cols, lines) = layout(g);
                if gi > 0 {
                    out.push('\n');
                }
                let mode = if g.eps_mode == "hscg-attainable" {
                    " (hscg-attainable)"
                } else {
                    ""
                };
                out += &format!("### {}, eps* = {}{}\n\n", g.matrix, eps_text(g), mode);
                let heads: Vec<String> = if cols.is_empty() {
                    vec!["result".to_string()]
                } else {
                    cols.iter().map(|s| format!("s={s}")).collect()
                };
                out += &format!("| algorithm | {} |\n", heads.join(" | "));
                out += &format!("|---|{}\n", "---|".repeat(heads.len()));
                for (label, cells) in lines {
                    out += &format!("| {} | {} |\n", label, cells.join(" | "));
                }
            }
        }
        TableFormat::Csv => {
            let all_cols: Vec<usize> = rows
                .iter()
                .filter_map(|r| r.s)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["matrix".to_string(), "eps_star".to_string(), "algorithm".to_string()];
            if all_cols.is_empty() {
                header.push("result".to_string());
            } else {
                header.extend(all_cols.iter().map(|s| format!("s={s}")));
            }
            w.write_record(&header)?;
            for g in groups(rows) {
                let (cols, lines) = layout(&g);
                for (label, cells) in lines {
                    let mut rec = vec![g.matrix.to_string(), eps_text(&g), label];
                    if all_cols.is_empty() {
                        rec.push(cells[0].clone());
                    } else if cols.is_empty() {
                        rec.extend(all_cols.iter().map(|_| cells[0].clone()));
                    } else {
                        rec.extend(all_cols.iter().map(|s| match cols.iter().position(|c| c == s) {
                            Some(i) => cells[i].clone(),
                            None => String::new(),
                        }));
                    }
                    w.write_record(&rec)?;
                }
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            out = String::from_utf8(bytes).expect("csv output is utf-8");
        }
    }
    Ok(out)
}

/// Writes [`render_summary_table`] output to `path`.
pub fn emit_summary_table(rows: &[ResultRow], format: TableFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_summary_table(rows, format)?;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Path of the per-cell trace directory inside a grid output directory.
pub fn trace_dir(out_dir: impl AsRef<Path>) -> PathBuf {
    out_dir.as_ref().join("traces")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matio::SparseMatrix;

    fn row(alg: &str, s: Option<usize>, cell: &str) -> ResultRow {
        ResultRow {
            matrix: "m".into(),
            algorithm: alg.into(),
            basis: if alg == "adaptive-improved" {
                "newton"
            } else {
                "monomial"
            }
            .into(),
            c_strategy: if alg == "adaptive-old" { "unit" } else { "adaptive" }.into(),
            s,
            eps_mode: "1e-6".into(),
            eps_star: 1e-6,
            cell: cell.into(),
            outcome: "converged".into(),
            total_iters: 0,
            total_outer: 0,
            outer_marks: 0,
            final_true_resid: 0.0,
            mean_s: 0.0,
            error: String::new(),
            trace_file: String::new(),
        }
    }

    #[test]
    fn round_up_two_digits() {
        assert_eq!(round_up_2sig(3.403e-14), 3.5e-14);
        assert_eq!(round_up_2sig(2.2e-10), 2.2e-10);
        assert_eq!(round_up_2sig(9.91e-7), 1.0e-6);
        assert!(round_up_2sig(1.234e-12) >= 1.234e-12);
    }

    #[test]
    fn markdown_table_cells() {
        let rows = vec![
            row("hscg", None, "510 (510)"),
            row("sstep", Some(5), "\u{2013}"),
            row("sstep", Some(10), "\u{2013} [3.1e-08]"),
            row("adaptive-improved", Some(5), "134 (1328)"),
        ];
        let md = render_summary_table(&rows, TableFormat::Markdown).unwrap();
        let expected = "### m, eps* = 1.0e-06\n\n\
                        | algorithm | s=5 | s=10 |\n\
                        |---|---|---|\n\
                        | hscg | 510 (510) | 510 (510) |\n\
                        | sstep | \u{2013} | \u{2013} [3.1e-08] |\n\
                        | adaptive-improved (newton, c=adaptive) | 134 (1328) |  |\n";
        assert_eq!(md, expected);
    }

    #[test]
    fn csv_table_cells() {
        let rows = vec![
            row("sstep", Some(5), "7 (34)"),
            row("adaptive-old", Some(5), "\u{2013}"),
        ];
        let text = render_summary_table(&rows, TableFormat::Csv).unwrap();
        assert_eq!(
            text,
            "matrix,eps_star,algorithm,s=5\nm,1.0e-06,sstep,7 (34)\nm,1.0e-06,adaptive-old,\u{2013}\n"
        );
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(render_summary_table(&[], TableFormat::Markdown).is_err());
    }

    #[test]
    fn identity_grid_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec {
            matrices: vec![MatrixSource::parse("gallery:identity-10").unwrap()],
            algorithms: vec![SolverKind::Hscg],
            eps_modes: vec![EpsMode::Fixed(1e-6)],
            ..ExperimentSpec::default()
        };
        let res = run_grid(&spec, dir.path()).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.rows[0].cell, "1 (1)");
        let trace = std::fs::read_to_string(dir.path().join(&res.rows[0].trace_file)).unwrap();
        assert_eq!(trace.lines().count(), 2);
        assert_eq!(read_rows(dir.path().join("results.csv")).unwrap(), res.rows);
    }

    #[test]
    fn missing_matrix_is_recorded_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec {
            matrices: vec![
                MatrixSource::parse("/nonexistent/none.mtx").unwrap(),
                MatrixSource::parse("gallery:identity-3").unwrap(),
            ],
            algorithms: vec![SolverKind::Hscg, SolverKind::Sstep],
            s_values: vec![2],
            eps_modes: vec![EpsMode::Fixed(1e-8)],
            ..ExperimentSpec::default()
        };
        let res = run_grid(&spec, dir.path()).unwrap();
        assert_eq!(res.rows.len(), 4);
        assert_eq!(res.rows[0].outcome, "error");
        assert_eq!(res.rows[1].outcome, "error");
        assert_eq!(res.rows[2].outcome, "converged");
    }

    #[test]
    fn trace_csv_rows_and_precision() {
        let p = ProblemInstance::with_rhs(SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]), vec![1.0; 3], "d").unwrap();
        let (_, trace) = run_solver(&p, &RunConfig::new(SolverKind::Hscg, 1), 1e-12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        emit_trace_csv(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), trace.total_iters);
        let first: Vec<&str> = rows[0].split(',').collect();
        let v: f64 = first[3].parse().unwrap();
        assert_eq!(v.to_bits(), trace.true_resid[0].to_bits());
    }
}
