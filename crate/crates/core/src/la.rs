//! Dense vector kernels, sparse matrix-vector products and small dense
//! symmetric linear algebra (Gram matrices, eigenvalues, condition estimates).
//!
//! Every reduction here accumulates sequentially in index order, so repeated
//! calls on identical inputs are bitwise reproducible.

use crate::error::{Error, Result};
use crate::matio::SparseMatrix;

/// Unit roundoff of IEEE binary64, `2^-53`.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-14;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

/// Euclidean norm with a compensated sum of squares.
pub fn norm2(x: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in x {
        let t = v * v;
        let next = sum + t;
        if sum.abs() >= t {
            comp += (sum - next) + t;
        } else {
            comp += (t - next) + sum;
        }
        sum = next;
    }
    (sum + comp).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// `y = A x`.
pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let mut y = vec![0.0; a.n()];
    spmv_into(a, x, &mut y)?;
    Ok(y)
}

/// `y = A x` into a caller-provided buffer.
pub fn spmv_into(a: &SparseMatrix, x: &[f64], y: &mut [f64]) -> Result<()> {
    if x.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: x.len(),
        });
    }
    if y.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: y.len(),
        });
    }
    let (row_ptr, col_idx, values) = (a.row_ptr(), a.col_idx(), a.values());
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in row_ptr[i]..row_ptr[i + 1] {
            acc += values[k] * x[col_idx[k]];
        }
        *yi = acc;
    }
    Ok(())
}

/// Small dense symmetric matrix in full row-major storage.
///
/// Off-diagonal entries are written once and mirrored, so the stored matrix
/// is always bitwise symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSymMatrix {
    order: usize,
    values: Vec<f64>,
}

impl SmallSymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            values: vec![0.0; order * order],
        }
    }

    /// Builds the matrix by evaluating `f(i, j)` for `i <= j` only.
    pub fn from_upper_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.order + j] = v;
        self.values[j * self.order + i] = v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.order + j]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_upper_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `x^T M y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.values[i * n..(i + 1) * n];
            acc += x[i] * dot(row, y);
        }
        acc
    }

    /// `M x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order;
        (0..n).map(|i| dot(&self.values[i * n..(i + 1) * n], x)).collect()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j] * a[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn sym_eig(m: &SmallSymMatrix) -> Result<Vec<f64>> {
    let n = m.order();
    if n == 0 {
        return Err(Error::Parameter("sym_eig on an empty matrix".into()));
    }
    let mut a = m.values().to_vec();
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    if !scale.is_finite() {
        return Err(Error::EigenNonConvergence { off_norm: scale });
    }
    let tol = JACOBI_REL_TOL * scale;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau.is_finite() {
                    tau.signum() / (tau.abs() + 1f64.hypot(tau))
                } else {
                    0.0
                };
                if t == 0.0 {
                    // rotation underflows: entry is negligible against the diagonal gap
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let c = 1.0 / 1f64.hypot(t);
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    if !converged {
        let off_norm = off_diagonal_norm(&a, n);
        if off_norm > tol {
            return Err(Error::EigenNonConvergence { off_norm });
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Gram matrix `Y^T Y` of the given columns, one inner product per unordered
/// pair.
pub fn gram<C: AsRef<[f64]>>(cols: &[C]) -> SmallSymMatrix {
    SmallSymMatrix::from_upper_fn(cols.len(), |i, j| dot(cols[i].as_ref(), cols[j].as_ref()))
}

/// Estimate of `kappa(Y_sub)` as `sqrt(kappa(G_sub))` where `G_sub` is the
/// principal submatrix of the Gram matrix on `cols`.
///
/// Returns `f64::INFINITY` when the submatrix is numerically singular
/// (`lambda_min <= order * u * lambda_max`) or the eigensolve fails.
pub fn gram_cond_estimate(g: &SmallSymMatrix, cols: &[usize]) -> Result<f64> {
    if cols.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= g.order()) {
        return Err(Error::Parameter(format!(
            "column index {bad} out of range for Gram matrix of order {}",
            g.order()
        )));
    }
    let sub = g.principal_submatrix(cols);
    let eig = match sym_eig(&sub) {
        Ok(e) => e,
        Err(Error::EigenNonConvergence { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let lmin = eig[0];
    let lmax = eig[eig.len() - 1];
    if !(lmax > 0.0) || lmin <= cols.len() as f64 * UNIT_ROUNDOFF * lmax {
        return Ok(f64::INFINITY);
    }
    Ok((lmax / lmin).sqrt())
}
