//! Matrix ingestion, two-sided diagonal scaling and problem construction.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::la::{dot, norm2, spmv};

/// Square sparse matrix in CSR form with sorted, duplicate-free rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    n_a: usize,
    is_symmetric: bool,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets; duplicates
    /// are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut trip = triplets.to_vec();
        for &(i, j, _) in &trip {
            if i >= n || j >= n {
                return Err(Error::Parameter(format!(
                    "entry ({i}, {j}) out of range for dimension {n}"
                )));
            }
        }
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut m = Self {
            n,
            row_ptr,
            col_idx,
            values,
            n_a: 0,
            is_symmetric: false,
        };
        m.n_a = m.max_row_population();
        m.is_symmetric = m.check_symmetric();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let trip: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &trip).expect("identity is well formed")
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let trip: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), &trip).expect("diagonal is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Maximum number of stored entries in any row.
    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn max_row_population(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Entrywise absolute value `|A|`.
    pub fn abs(&self) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v = v.abs());
        m
    }

    /// Exact symmetry of pattern and values.
    pub fn check_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row(i).all(|(j, v)| {
                let range = self.row_ptr[j]..self.row_ptr[j + 1];
                match self.col_idx[range.clone()].binary_search(&i) {
                    Ok(k) => self.values[range.start + k] == v,
                    Err(_) => false,
                }
            })
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m.values[k] = f(i, self.col_idx[k], self.values[k]);
            }
        }
        m.is_symmetric = m.check_symmetric();
        m
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a Matrix Market coordinate file (real or integer field, general or
/// symmetric). Symmetric storage is expanded to both triangles and
/// duplicate entries are summed.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

pub(crate) fn parse_matrix_market(text: &str, path: &Path) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (lineno, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, lineno, "malformed %%MatrixMarket header"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(
            path,
            lineno,
            format!("unsupported format '{}', expected coordinate", tokens[2]),
        ));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "complex" => return Err(parse_err(path, lineno, "complex matrices are not supported")),
        "pattern" => return Err(parse_err(path, lineno, "pattern-only matrices carry no values")),
        other => return Err(parse_err(path, lineno, format!("unknown field '{other}'"))),
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, lineno, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (lineno, size_line) = data
        .next()
        .ok_or_else(|| parse_err(path, lineno + 1, "missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(path, lineno, format!("bad size line: {e}")))?;
    if dims.len() != 3 {
        return Err(parse_err(path, lineno, "size line must have three integers"));
    }
    let (rows, cols, nnz) = (dims[0], dims[1], dims[2]);
    if rows != cols {
        return Err(parse_err(
            path,
            lineno,
            format!("matrix is not square ({rows} x {cols})"),
        ));
    }

    let mut trip = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut last_line = lineno;
    for _ in 0..nnz {
        let (lineno, line) = data
            .next()
            .ok_or_else(|| parse_err(path, last_line + 1, format!("expected {nnz} entries")))?;
        last_line = lineno;
        let mut it = line.split_whitespace();
        let mut index = |what: &str| -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(path, lineno, format!("missing {what} index")))?;
            let k: usize = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad {what} index '{tok}'")))?;
            if k == 0 || k > rows {
                return Err(parse_err(path, lineno, format!("{what} index {k} out of range")));
            }
            Ok(k - 1)
        };
        let i = index("row")?;
        let j = index("column")?;
        let tok = it.next().ok_or_else(|| parse_err(path, lineno, "missing value"))?;
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad value '{tok}'")))?;
        if it.next().is_some() {
            return Err(parse_err(path, lineno, "trailing tokens on entry line"));
        }
        trip.push((i, j, v));
        if symmetric && i != j {
            trip.push((j, i, v));
        }
    }
    if let Some((lineno, _)) = data.next() {
        return Err(parse_err(path, lineno, format!("more than {nnz} entries")));
    }
    SparseMatrix::from_triplets(rows, &trip)
}

/// Writes the matrix as a symmetric (lower triangle) Matrix Market file when
/// it is symmetric, otherwise as general.
pub fn write_matrix_market(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let sym = a.is_symmetric();
    let mut out = String::new();
    let kind = if sym { "symmetric" } else { "general" };
    let _ = writeln!(out, "%%MatrixMarket matrix coordinate real {kind}");
    let entries: Vec<(usize, usize, f64)> = (0..a.n())
        .flat_map(|i| a.row(i).map(move |(j, v)| (i, j, v)))
        .filter(|&(i, j, _)| !sym || j <= i)
        .collect();
    let _ = writeln!(out, "{} {} {}", a.n(), a.n(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Two-sided diagonal scaling `D^{-1/2} A D^{-1/2}` with `D` the largest
/// absolute entry of each row. Returns the scaled matrix and `d^{-1/2}`.
pub fn jacobi_precondition(a: &SparseMatrix) -> Result<(SparseMatrix, Vec<f64>)> {
    let mut scale = Vec::with_capacity(a.n());
    for i in 0..a.n() {
        let dmax = a.row(i).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        if !(dmax > 0.0) || !dmax.is_finite() {
            return Err(Error::DegenerateMatrix { row: i, value: dmax });
        }
        scale.push(1.0 / dmax.sqrt());
    }
    // a_ij * (s_i * s_j) keeps exact symmetry: the product commutes
    let scaled = a.map_values(|i, j, v| v * (scale[i] * scale[j]));
    Ok((scaled, scale))
}

/// Right-hand side with all entries `1/sqrt(n)`.
pub fn build_rhs(n: usize) -> Vec<f64> {
    assert!(n >= 1, "build_rhs needs n >= 1");
    vec![1.0 / (n as f64).sqrt(); n]
}

pub const POWER_ITERS: usize = 500;
pub const POWER_TOL: f64 = 1e-10;
pub const DENSE_EIG_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorms {
    pub norm_a: f64,
    pub norm_abs_a: f64,
    pub kappa_a: f64,
    pub lambda_min: f64,
    /// Largest iteration count used by any of the iterative estimates.
    pub iterations: usize,
    /// Set when an iterative estimate stopped at the iteration limit.
    pub approximate: bool,
}

impl OperatorNorms {
    pub fn nu(&self) -> f64 {
        self.norm_abs_a / self.norm_a
    }
}

struct PowerResult {
    value: f64,
    iterations: usize,
    converged: bool,
}

fn power_start(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i + 1) as f64).sin()).collect();
    let nv = norm2(&v);
    v.into_iter().map(|x| x / nv).collect()
}

fn power_iteration(op: impl Fn(&[f64]) -> Vec<f64>, n: usize, iters: usize, tol: f64) -> PowerResult {
    let mut v = power_start(n);
    let mut lambda = 0.0;
    for k in 1..=iters {
        let w = op(&v);
        let new_lambda = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return PowerResult {
                value: 0.0,
                iterations: k,
                converged: true,
            };
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if k > 1 && (new_lambda - lambda).abs() <= tol * new_lambda.abs() {
            return PowerResult {
                value: new_lambda,
                iterations: k,
                converged: true,
            };
        }
        lambda = new_lambda;
    }
    PowerResult {
        value: lambda,
        iterations: iters,
        converged: false,
    }
}

/// Estimates `||A||_2`, `|| |A| ||_2` and `kappa(A)` for a symmetric positive
/// definite matrix.
pub fn estimate_operator_norms(a: &SparseMatrix, iters: usize, tol: f64) -> Result<OperatorNorms> {
    let n = a.n();
    let abs = a.abs();
    let top = power_iteration(|x| spmv(a, x).expect("square"), n, iters, tol);
    let top_abs = power_iteration(|x| spmv(&abs, x).expect("square"), n, iters, tol);
    let norm_a = top.value.abs();
    if !(norm_a > 0.0) {
        return Err(Error::Parameter("matrix has zero norm".into()));
    }
    let mut iterations = top.iterations.max(top_abs.iterations);
    let mut approximate = !top.converged || !top_abs.converged;

    let lambda_min = if n <= DENSE_EIG_LIMIT {
        let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| a.get(i, j));
        dense.symmetric_eigenvalues().min()
    } else {
        let shifted = power_iteration(
            |x| {
                let ax = spmv(a, x).expect("square");
                x.iter().zip(ax).map(|(xi, axi)| norm_a * xi - axi).collect()
            },
            n,
            iters,
            tol,
        );
        iterations = iterations.max(shifted.iterations);
        approximate |= !shifted.converged;
        norm_a - shifted.value
    };
    if !(lambda_min > 0.0) {
        return Err(Error::Parameter(format!(
            "matrix is not positive definite (lambda_min = {lambda_min:e})"
        )));
    }
    Ok(OperatorNorms {
        norm_a,
        norm_abs_a: top_abs.value.abs(),
        kappa_a: (norm_a / lambda_min).max(1.0),
        lambda_min,
        iterations,
        approximate,
    })
}

/// A scaled linear system ready for the solvers.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    /// Scaled operator `D^{-1/2} A D^{-1/2}`.
    pub a: SparseMatrix,
    /// Right-hand side of the scaled system.
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    pub norm_a: f64,
    pub norm_abs_a: f64,
    pub kappa_a: f64,
    pub lambda_min: f64,
    pub label: String,
}

impl ProblemInstance {
    /// Experimental setup: scale `A` two-sided by its row maxima, take the
    /// unscaled right-hand side with entries `1/sqrt(n)` and transform it
    /// with the same scaling, start from `x0 = 0`.
    pub fn from_matrix(a: &SparseMatrix, label: impl Into<String>) -> Result<Self> {
        let (scaled, s) = jacobi_precondition(a)?;
        let b: Vec<f64> = build_rhs(a.n()).iter().zip(&s).map(|(bi, si)| bi * si).collect();
        Self::with_rhs(scaled, b, label)
    }

    /// Uses `a` and `b` as given (no scaling).
    pub fn with_rhs(a: SparseMatrix, b: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if b.len() != a.n() {
            return Err(Error::DimensionMismatch {
                expected: a.n(),
                got: b.len(),
            });
        }
        let norms = estimate_operator_norms(&a, POWER_ITERS, POWER_TOL)?;
        Ok(Self {
            x0: vec![0.0; a.n()],
            a,
            b,
            norm_a: norms.norm_a,
            norm_abs_a: norms.norm_abs_a,
            kappa_a: norms.kappa_a,
            lambda_min: norms.lambda_min,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn nu(&self) -> f64 {
        self.norm_abs_a / self.norm_a
    }

    pub fn b_norm(&self) -> f64 {
        norm2(&self.b)
    }
}
