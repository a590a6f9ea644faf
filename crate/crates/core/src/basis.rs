//! Polynomial basis parameters and s-step basis blocks.
//!
//! A block holds `Y = [P | R]` with `P = [rho_0(A) p, ..., rho_s(A) p]` and
//! `R = [rho_0(A) r, ..., rho_{s-1}(A) r]`, where the polynomials satisfy
//!
//! ```text
//! rho_0 = 1
//! rho_1(z) = (z - theta_0) rho_0(z) / gamma_0
//! rho_l(z) = ((z - theta_{l-1}) rho_{l-1}(z) - mu_{l-2} rho_{l-2}(z)) / gamma_{l-1}
//! ```
//!
//! and the change-of-basis matrix `B` with `A * Y_ = Y * B`, `Y_` being `Y`
//! with the last column of each sub-block zeroed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la::{gram, gram_cond_estimate, spmv_into, SmallSymMatrix};
use crate::matio::SparseMatrix;

/// Default number of Leja candidates. Odd, so the interval midpoint is a
/// candidate.
pub const LEJA_GRID: usize = 10_001;

/// Log-sum objectives within this many units of rounding of the running
/// best are ties, resolved toward the smaller point.
const LEJA_TIE_ULPS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Monomial,
    Newton,
    Chebyshev,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Monomial => "monomial",
            BasisKind::Newton => "newton",
            BasisKind::Chebyshev => "chebyshev",
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "monomial" => Ok(BasisKind::Monomial),
            "newton" => Ok(BasisKind::Newton),
            "chebyshev" | "cheb" => Ok(BasisKind::Chebyshev),
            other => Err(Error::Config(format!("unknown basis '{other}'"))),
        }
    }
}

/// Recurrence coefficients for degrees `0..s`: `s` shifts and scales and
/// `s - 1` second-term weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisParams {
    pub kind: BasisKind,
    pub thetas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub mus: Vec<f64>,
    pub generated_from: Option<(f64, f64)>,
}

impl BasisParams {
    /// Largest block size these coefficients cover.
    pub fn max_s(&self) -> usize {
        self.thetas.len()
    }

    /// Builds parameters of `kind` for block size `s`, falling back to the
    /// monomial basis when no usable spectral bounds are given.
    pub fn for_kind(kind: BasisKind, bounds: Option<(f64, f64)>, s: usize, grid: usize) -> Self {
        match (kind, bounds) {
            (BasisKind::Newton, Some((lo, hi))) => {
                newton_params(lo, hi, s, grid).unwrap_or_else(|_| monomial_params(s))
            }
            (BasisKind::Chebyshev, Some((lo, hi))) => {
                chebyshev_params(lo, hi, s).unwrap_or_else(|_| monomial_params(s))
            }
            _ => monomial_params(s),
        }
    }
}

pub fn monomial_params(s: usize) -> BasisParams {
    assert!(s >= 1, "block size must be at least 1");
    BasisParams {
        kind: BasisKind::Monomial,
        thetas: vec![0.0; s],
        gammas: vec![1.0; s],
        mus: vec![0.0; s - 1],
        generated_from: None,
    }
}

fn check_interval(lmin: f64, lmax: f64) -> Result<()> {
    if !(lmin.is_finite() && lmax.is_finite()) || lmin >= lmax {
        return Err(Error::Parameter(format!(
            "spectral interval [{lmin:e}, {lmax:e}] is empty or not finite"
        )));
    }
    Ok(())
}

/// Newton basis with Leja-ordered shifts on `[lmin, lmax]`.
///
/// The first two shifts are `lmax` and `lmin`; each further shift maximizes
/// `sum_m log|theta - theta_m|` over `grid_points` uniformly spaced
/// candidates.
pub fn newton_params(lmin: f64, lmax: f64, s: usize, grid_points: usize) -> Result<BasisParams> {
    check_interval(lmin, lmax)?;
    if s == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    let grid_points = grid_points.max(2);
    let step = (lmax - lmin) / (grid_points - 1) as f64;
    let mut thetas = vec![lmax];
    if s > 1 {
        thetas.push(lmin);
    }
    while thetas.len() < s {
        let mut best = f64::NEG_INFINITY;
        let mut best_theta = lmin;
        for g in 0..grid_points {
            let theta = if g == grid_points - 1 {
                lmax
            } else {
                lmin + g as f64 * step
            };
            let obj: f64 = thetas.iter().map(|t| (theta - t).abs().ln()).sum();
            let tol = LEJA_TIE_ULPS * f64::EPSILON * best.abs().max(1.0);
            if obj > best + tol || best == f64::NEG_INFINITY {
                best = obj;
                best_theta = theta;
            }
        }
        thetas.push(best_theta);
    }
    Ok(BasisParams {
        kind: BasisKind::Newton,
        gammas: vec![1.0; s],
        mus: vec![0.0; s - 1],
        thetas,
        generated_from: Some((lmin, lmax)),
    })
}

/// Simplified Chebyshev basis on `[lmin, lmax]`.
pub fn chebyshev_params(lmin: f64, lmax: f64, s: usize) -> Result<BasisParams> {
    check_interval(lmin, lmax)?;
    if s == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    let width = lmax - lmin;
    let mut gammas = vec![width / 2.0; s];
    gammas[0] = width;
    Ok(BasisParams {
        kind: BasisKind::Chebyshev,
        thetas: vec![(lmin + lmax) / 2.0; s],
        gammas,
        mus: vec![2.0 * width; s - 1],
        generated_from: Some((lmin, lmax)),
    })
}

/// Change-of-basis block of order `size` for a polynomial sub-basis of
/// `size` columns: `theta` on the diagonal, `gamma` below, `mu` above, last
/// column zero. Row-major.
fn recurrence_block(params: &BasisParams, size: usize) -> Vec<f64> {
    let mut b = vec![0.0; size * size];
    for l in 0..size.saturating_sub(1) {
        b[l * size + l] = params.thetas[l];
        b[(l + 1) * size + l] = params.gammas[l];
        if l >= 1 {
            b[(l - 1) * size + l] = params.mus[l - 1];
        }
    }
    b
}

/// Change-of-basis matrix for block size `s`: `diag(B_{s+1}, B_s)`,
/// row-major of order `2s + 1`.
pub fn change_of_basis(params: &BasisParams, s: usize) -> Vec<f64> {
    let order = 2 * s + 1;
    let mut out = vec![0.0; order * order];
    let bp = recurrence_block(params, s + 1);
    let br = recurrence_block(params, s);
    for i in 0..=s {
        for j in 0..=s {
            out[i * order + j] = bp[i * (s + 1) + j];
        }
    }
    for i in 0..s {
        for j in 0..s {
            out[(s + 1 + i) * order + (s + 1 + j)] = br[i * s + j];
        }
    }
    out
}

/// Column indices of `Y_{k,i}` inside a block of size `s`: `P` columns
/// `0..=i` and `R` columns `0..i`.
pub fn sub_basis_columns(s: usize, i: usize) -> Vec<usize> {
    (0..=i).chain(s + 1..s + 1 + i).collect()
}

/// One outer loop's basis, change of basis, Gram matrix and nested condition
/// estimates.
#[derive(Debug, Clone)]
pub struct SStepBlock {
    pub s: usize,
    /// Columns of `Y = [P | R]`, `2s + 1` of them.
    pub y: Vec<Vec<f64>>,
    /// `B`, row-major `(2s+1) x (2s+1)`.
    pub b_mat: Vec<f64>,
    pub g: SmallSymMatrix,
    /// `cond_estimates[i - 1]` estimates `kappa(Y_{k,i})` for `i = 1..=s`.
    pub cond_estimates: Vec<f64>,
    pub params: BasisParams,
    /// Set when a basis column is zero or not finite.
    pub breakdown: bool,
}

impl SStepBlock {
    pub fn order(&self) -> usize {
        2 * self.s + 1
    }

    /// `kappa(Y_{k,i})` estimate for `1 <= i <= s`.
    pub fn cond_of(&self, i: usize) -> f64 {
        self.cond_estimates[i - 1]
    }

    /// `B x`
    pub fn apply_b(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let row = &self.b_mat[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Restricts the block to size `s_new <= s`: keeps the leading columns of
    /// each sub-basis and rebuilds `B` and `G` for the smaller size.
    pub fn truncate(&self, s_new: usize) -> SStepBlock {
        assert!(s_new >= 1 && s_new <= self.s);
        if s_new == self.s {
            return self.clone();
        }
        let cols = sub_basis_columns(self.s, s_new);
        SStepBlock {
            s: s_new,
            y: cols.iter().map(|&c| self.y[c].clone()).collect(),
            b_mat: change_of_basis(&self.params, s_new),
            g: self.g.principal_submatrix(&cols),
            cond_estimates: self.cond_estimates[..s_new].to_vec(),
            params: self.params.clone(),
            breakdown: self.breakdown,
        }
    }
}

/// Builds `Y = [P | R]` from `p` and `r` with the recurrence in `params`,
/// assembles `B`, the Gram matrix and the nested condition estimates.
pub fn build_block(a: &SparseMatrix, p: &[f64], r: &[f64], params: &BasisParams, s: usize) -> Result<SStepBlock> {
    let n = a.n();
    if s == 0 {
        return Err(Error::Parameter("block size must be at least 1".into()));
    }
    if params.max_s() < s {
        return Err(Error::Parameter(format!(
            "basis parameters cover s = {}, block needs {s}",
            params.max_s()
        )));
    }
    for v in [p, r] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }

    let mut y: Vec<Vec<f64>> = Vec::with_capacity(2 * s + 1);
    krylov_columns(a, p, params, s + 1, &mut y);
    krylov_columns(a, r, params, s, &mut y);
    let breakdown = y
        .iter()
        .any(|c| c.iter().any(|v| !v.is_finite()) || c.iter().all(|&v| v == 0.0));

    let g = gram(&y);
    let mut cond_estimates = Vec::with_capacity(s);
    for i in 1..=s {
        cond_estimates.push(gram_cond_estimate(&g, &sub_basis_columns(s, i))?);
    }
    Ok(SStepBlock {
        s,
        b_mat: change_of_basis(params, s),
        y,
        g,
        cond_estimates,
        params: params.clone(),
        breakdown,
    })
}

fn krylov_columns(a: &SparseMatrix, v: &[f64], params: &BasisParams, count: usize, out: &mut Vec<Vec<f64>>) {
    let start = out.len();
    out.push(v.to_vec());
    let mut av = vec![0.0; v.len()];
    for l in 1..count {
        let prev = &out[start + l - 1];
        spmv_into(a, prev, &mut av).expect("dimensions checked");
        let theta = params.thetas[l - 1];
        let gamma = params.gammas[l - 1];
        let next: Vec<f64> = if l >= 2 {
            let mu = params.mus[l - 2];
            let prev2 = &out[start + l - 2];
            av.iter()
                .zip(prev)
                .zip(prev2)
                .map(|((&ax, &x), &x2)| ((ax - theta * x) - mu * x2) / gamma)
                .collect()
        } else {
            av.iter().zip(prev).map(|(&ax, &x)| (ax - theta * x) / gamma).collect()
        };
        out.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::spmv;
    use approx::assert_relative_eq;

    #[test]
    fn monomial_shapes() {
        let p = monomial_params(1);
        assert_eq!((p.thetas, p.gammas, p.mus), (vec![0.0], vec![1.0], vec![]));
        let p = monomial_params(3);
        assert_eq!(p.thetas, vec![0.0; 3]);
        assert_eq!(p.gammas, vec![1.0; 3]);
    }

    #[test]
    fn monomial_block_is_power_sequence() {
        let a =
            SparseMatrix::from_triplets(3, &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 5.0), (0, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let v = vec![1.0, -1.0, 0.5];
        let blk = build_block(&a, &v, &v, &monomial_params(3), 3).unwrap();
        let mut w = v.clone();
        for l in 0..=3 {
            assert_eq!(blk.y[l], w);
            if l < 3 {
                assert_eq!(blk.y[4 + l], w);
            }
            w = spmv(&a, &w).unwrap();
        }
    }

    #[test]
    fn identity_block_gram_all_ones() {
        let a = SparseMatrix::identity(4);
        let e1 = vec![1.0, 0.0, 0.0, 0.0];
        let blk = build_block(&a, &e1, &e1, &monomial_params(3), 3).unwrap();
        for l in 0..=3 {
            assert_eq!(blk.y[l], e1);
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(blk.g.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn newton_endpoints() {
        let p = newton_params(1.0, 3.0, 2, LEJA_GRID).unwrap();
        assert_eq!(p.thetas, vec![3.0, 1.0]);
        assert!(p.mus.iter().all(|&m| m == 0.0));
        assert!(newton_params(0.5, 0.5, 3, LEJA_GRID).is_err());
        assert!(newton_params(2.0, 1.0, 3, LEJA_GRID).is_err());
    }

    #[test]
    fn newton_leja_points_on_fine_grid() {
        let p = newton_params(0.0, 4.0, 4, 1_000_001).unwrap();
        assert_eq!(p.thetas[0], 4.0);
        assert_eq!(p.thetas[1], 0.0);
        assert_relative_eq!(p.thetas[2], 2.0, max_relative = 1e-12);
        assert!((p.thetas[3] - (2.0 - 2.0 / 3f64.sqrt())).abs() <= 4.0 / 1_000_000.0);
    }

    #[test]
    fn newton_is_deterministic() {
        let a = newton_params(0.013, 1.97, 15, LEJA_GRID).unwrap();
        let b = newton_params(0.013, 1.97, 15, LEJA_GRID).unwrap();
        assert_eq!(a, b);
        assert!(a.thetas.iter().all(|&t| (0.013..=1.97).contains(&t)));
    }

    #[test]
    fn chebyshev_examples() {
        let p = chebyshev_params(1.0, 3.0, 3).unwrap();
        assert_eq!(p.thetas, vec![2.0; 3]);
        assert_eq!(p.mus, vec![4.0, 4.0]);
        assert_eq!(p.gammas, vec![2.0, 1.0, 1.0]);
        let p = chebyshev_params(0.0, 2.0, 2).unwrap();
        assert_eq!((p.thetas, p.gammas, p.mus), (vec![1.0, 1.0], vec![2.0, 1.0], vec![4.0]));
        assert!(chebyshev_params(1.0, 1.0, 2).is_err());
    }

    #[test]
    fn change_of_basis_structure() {
        let p = chebyshev_params(1.0, 3.0, 3).unwrap();
        let b = change_of_basis(&p, 3);
        let order = 7;
        // zero columns at s and 2s
        for i in 0..order {
            assert_eq!(b[i * order + 3], 0.0);
            assert_eq!(b[i * order + 6], 0.0);
        }
        assert_eq!(b[0], 2.0);
        assert_eq!(b[order], 2.0);
        assert_eq!(b[1], 4.0);
        // R block starts at (4,4)
        assert_eq!(b[4 * order + 4], 2.0);
        assert_eq!(b[5 * order + 4], 2.0);
        // no coupling between blocks
        assert_eq!(b[4 * order + 2], 0.0);
    }

    #[test]
    fn chebyshev_block_satisfies_recurrence_identity() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let v = vec![1.0 / 3f64.sqrt(); 3];
        let params = chebyshev_params(1.0, 3.0, 3).unwrap();
        let blk = build_block(&a, &v, &v, &params, 3).unwrap();
        let order = blk.order();
        for j in 0..order {
            let lhs = if j == 3 || j == 6 {
                vec![0.0; 3]
            } else {
                spmv(&a, &blk.y[j]).unwrap()
            };
            let mut rhs = vec![0.0; 3];
            for (k, col) in blk.y.iter().enumerate() {
                for (r, c) in rhs.iter_mut().zip(col) {
                    *r += c * blk.b_mat[k * order + j];
                }
            }
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!((l - r).abs() <= 1e-14, "column {j}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn truncation_keeps_leading_columns() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let v = vec![0.5; 4];
        let w = vec![1.0, 0.0, -1.0, 2.0];
        let params = newton_params(1.0, 4.0, 4, LEJA_GRID).unwrap();
        let big = build_block(&a, &v, &w, &params, 4).unwrap();
        let small = big.truncate(2);
        let direct = build_block(&a, &v, &w, &params, 2).unwrap();
        assert_eq!(small.y, direct.y);
        assert_eq!(small.b_mat, direct.b_mat);
        assert_eq!(small.g, direct.g);
        assert_eq!(small.cond_estimates, direct.cond_estimates);
    }

    #[test]
    fn breakdown_flag_on_zero_column() {
        let a = SparseMatrix::identity(3);
        let v = vec![1.0, 2.0, 3.0];
        let zero = vec![0.0; 3];
        let blk = build_block(&a, &v, &zero, &monomial_params(2), 2).unwrap();
        assert!(blk.breakdown);
    }
}
