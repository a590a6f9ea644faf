//! Test matrices that can be generated instead of downloaded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matio::SparseMatrix;

/// Nine-point stencil on a `k x k` grid: 8 on the diagonal, -1 for every
/// neighbour including diagonals. `grid9(30)` is the `gr_30_30` matrix.
pub fn grid9(k: usize) -> SparseMatrix {
    let n = k * k;
    let mut t = Vec::with_capacity(9 * n);
    for i in 0..k {
        for j in 0..k {
            let row = i * k + j;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= k as i64 || jj >= k as i64 {
                        continue;
                    }
                    let col = ii as usize * k + jj as usize;
                    t.push((row, col, if col == row { 8.0 } else { -1.0 }));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, &t).expect("indices in range")
}

pub fn gr_30_30() -> SparseMatrix {
    grid9(30)
}

/// Five-point Laplacian on a `k x k` grid.
pub fn laplace2d(k: usize) -> SparseMatrix {
    let n = k * k;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..k {
        for j in 0..k {
            let row = i * k + j;
            t.push((row, row, 4.0));
            if i > 0 {
                t.push((row, row - k, -1.0));
            }
            if i + 1 < k {
                t.push((row, row + k, -1.0));
            }
            if j > 0 {
                t.push((row, row - 1, -1.0));
            }
            if j + 1 < k {
                t.push((row, row + 1, -1.0));
            }
        }
    }
    SparseMatrix::from_triplets(n, &t).expect("indices in range")
}

/// Tridiagonal `[-1, 2, -1]`.
pub fn laplace1d(n: usize) -> SparseMatrix {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    SparseMatrix::from_triplets(n, &t).expect("indices in range")
}

/// Pentadiagonal `[1, -4, 6, -4, 1]`, a discrete biharmonic on a line with
/// condition number growing like `n^4`.
pub fn biharmonic1d(n: usize) -> SparseMatrix {
    let stencil = [(-2i64, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..n as i64 {
        for &(o, v) in &stencil {
            let j = i + o;
            if j >= 0 && j < n as i64 {
                t.push((i as usize, j as usize, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, &t).expect("indices in range")
}

/// Diagonal matrix with eigenvalues geometrically spaced in `[1, kappa]`.
pub fn geometric_diagonal(n: usize, kappa: f64) -> SparseMatrix {
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                kappa.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    SparseMatrix::from_diagonal(&d)
}

/// Random sparse SPD matrix: a symmetric pattern with about `per_row`
/// off-diagonal entries per row and a diagonal that dominates by `shift`.
pub fn random_spd(n: usize, per_row: usize, shift: f64, seed: u64) -> SparseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        for _ in 0..per_row / 2 {
            let j = rng.gen_range(0..n);
            if j == i {
                continue;
            }
            let v: f64 = rng.gen_range(-1.0..1.0);
            t.push((i, j, v));
            t.push((j, i, v));
            rowsum[i] += v.abs();
            rowsum[j] += v.abs();
        }
    }
    for (i, s) in rowsum.iter().enumerate() {
        t.push((i, i, s + shift));
    }
    SparseMatrix::from_triplets(n, &t).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matio::{estimate_operator_norms, jacobi_precondition, POWER_ITERS, POWER_TOL};

    #[test]
    fn gr_30_30_shape_and_scaled_norms() {
        let a = gr_30_30();
        assert_eq!(a.n(), 900);
        assert_eq!(a.nnz(), 7744);
        assert!(a.check_symmetric());
        let (s, _) = jacobi_precondition(&a).unwrap();
        let norms = estimate_operator_norms(&s, POWER_ITERS, POWER_TOL).unwrap();
        assert!((norms.norm_a - 1.49).abs() < 0.01, "{}", norms.norm_a);
        assert!((norms.kappa_a / 195.0 - 1.0).abs() < 0.02, "{}", norms.kappa_a);
    }

    #[test]
    fn generators_are_symmetric() {
        for a in [laplace1d(10), laplace2d(5), biharmonic1d(12), random_spd(40, 6, 0.1, 1)] {
            assert!(a.check_symmetric());
        }
        assert_eq!(laplace2d(4).nnz(), 16 + 2 * 24);
        assert_eq!(biharmonic1d(5).nnz(), 5 + 8 + 6);
    }

    #[test]
    fn random_spd_is_deterministic() {
        assert_eq!(random_spd(30, 4, 1.0, 7), random_spd(30, 4, 1.0, 7));
    }
}
