//! Checks shared by the property suite and the acceptance target.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sstep_cg::adaptive::select_s_tilde;
use sstep_cg::basis::{
    build_block, chebyshev_params, monomial_params, newton_params, sub_basis_columns, BasisKind, BasisParams,
    SStepBlock,
};
use sstep_cg::gallery::{geometric_diagonal, random_spd};
use sstep_cg::hscg::{hscg_solve, Hscg};
use sstep_cg::la::{dot, norm2, spmv, UNIT_ROUNDOFF};
use sstep_cg::matio::ProblemInstance;
use sstep_cg::ritz::RitzState;
use sstep_cg::sstep::{sstep_solve, ParamsSource};
use sstep_cg::trace::SolveTrace;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Scaled random sparse SPD problem.
pub fn random_problem(seed: u64, n: usize) -> ProblemInstance {
    let a = random_spd(n, 6, 0.05, seed);
    ProblemInstance::from_matrix(&a, format!("random-{seed}")).expect("random matrix is SPD")
}

pub fn params_for(kind: BasisKind, lmin: f64, lmax: f64, s: usize) -> BasisParams {
    match kind {
        BasisKind::Monomial => monomial_params(s),
        BasisKind::Newton => newton_params(lmin, lmax, s, 2001).unwrap(),
        BasisKind::Chebyshev => chebyshev_params(lmin, lmax, s).unwrap(),
    }
}

/// `||A Y_ - Y B||_F / (u ||A||_2 ||Y||_F)` where `Y_` zeroes the last column
/// of each polynomial sub-basis.
pub fn recurrence_ratio(p: &ProblemInstance, block: &SStepBlock) -> f64 {
    let order = block.order();
    let s = block.s;
    let n = p.n();
    let mut num = 0.0;
    for j in 0..order {
        let mut col = if j == s || j == 2 * s {
            vec![0.0; n]
        } else {
            spmv(&p.a, &block.y[j]).unwrap()
        };
        for k in 0..order {
            let b = block.b_mat[k * order + j];
            if b != 0.0 {
                for (c, y) in col.iter_mut().zip(&block.y[k]) {
                    *c -= b * y;
                }
            }
        }
        num += dot(&col, &col);
    }
    let yf: f64 = block.y.iter().map(|c| dot(c, c)).sum::<f64>().sqrt();
    num.sqrt() / (UNIT_ROUNDOFF * p.norm_a * yf)
}

/// One random basis block and its recurrence ratio.
pub fn random_block_ratio(seed: u64) -> (String, f64) {
    let mut g = rng(seed);
    let n = g.gen_range(20..160);
    let p = random_problem(seed ^ 0x5eed, n);
    let s = g.gen_range(1..=10);
    let kind = [BasisKind::Monomial, BasisKind::Newton, BasisKind::Chebyshev][g.gen_range(0..3)];
    let params = params_for(kind, p.lambda_min, p.norm_a, s);
    let pv = random_vec(&mut g, n);
    let rv = random_vec(&mut g, n);
    let block = build_block(&p.a, &pv, &rv, &params, s).unwrap();
    (format!("n={n} s={s} {kind}"), recurrence_ratio(&p, &block))
}

/// Double-double number `hi + lo` for oracles that must be accurate well
/// below one ulp.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

impl Dd {
    fn from(v: f64) -> Self {
        Dd(v, 0.0)
    }

    fn norm(s: f64, e: f64) -> Self {
        let hi = s + e;
        Dd(hi, e - (hi - s))
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.0 + o.0;
        let bb = s - self.0;
        let e = (self.0 - (s - bb)) + (o.0 - bb) + self.1 + o.1;
        Dd::norm(s, e)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + self.0 * o.1 + self.1 * o.0;
        Dd::norm(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self.add(o.mul(Dd::from(q1)).neg());
        let q2 = r.0 / o.0;
        let r = r.add(o.mul(Dd::from(q2)).neg());
        let q3 = r.0 / o.0;
        Dd::norm(q1, q2).add(Dd::from(q3))
    }

    fn sqrt(self) -> Dd {
        let s = Dd::from(self.0.sqrt());
        let corr = self.add(s.mul(s).neg()).div(s.mul(Dd::from(2.0)));
        s.add(corr)
    }
}

/// Extreme eigenvalues of the order-2 CG tridiagonal, in double-double.
fn order2_extremes(a0: f64, a1: f64, b0: f64) -> (f64, f64) {
    let one = Dd::from(1.0);
    let (a0, a1, b0) = (Dd::from(a0), Dd::from(a1), Dd::from(b0));
    let t00 = one.div(a0);
    let t11 = one.div(a1).add(b0.div(a0));
    let off2 = b0.div(a0.mul(a0));
    let half = Dd::from(0.5);
    let mid = t00.add(t11).mul(half);
    let gap = t00.add(t11.neg()).mul(half);
    let hi = mid.add(gap.mul(gap).add(off2).sqrt());
    // det(T) = 1 / (alpha_0 alpha_1)
    let lo = one.div(a0.mul(a1)).div(hi);
    (lo.0 + lo.1, hi.0 + hi.1)
}

/// Extreme eigenvalues of the CG tridiagonal built from `alphas`, `betas`.
pub fn tridiag_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for l in 0..k {
        t[(l, l)] = 1.0 / alphas[l] + if l > 0 { betas[l - 1] / alphas[l - 1] } else { 0.0 };
        if l + 1 < k {
            let off = betas[l].sqrt() / alphas[l];
            t[(l, l + 1)] = off;
            t[(l + 1, l)] = off;
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    (ev.min(), ev.max())
}

/// Random positive coefficient sequence of length `len`.
pub fn random_coefficients(seed: u64, len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut g = rng(seed);
    let alphas = (0..len).map(|_| 10f64.powf(g.gen_range(-1.5..1.5))).collect();
    let betas = (0..len).map(|_| 10f64.powf(g.gen_range(-2.0..0.3))).collect();
    (alphas, betas)
}

/// Order-2 exactness and one-sided agreement of the incremental estimates
/// with the exact Ritz values, at every prefix of the sequence.
pub fn check_ritz_sequence(alphas: &[f64], betas: &[f64]) -> Result<(), String> {
    let mut st = RitzState::new();
    for k in 0..alphas.len() {
        st.absorb_step(alphas[k], betas[k]).map_err(|e| e.to_string())?;
        let (lo, hi) = tridiag_extremes(&alphas[..=k], &betas[..k]);
        let (est_lo, est_hi) = (st.lambda_min(), st.lambda_max());
        if k == 1 {
            let (lo2, hi2) = order2_extremes(alphas[0], alphas[1], betas[0]);
            let tol = 4.0 * UNIT_ROUNDOFF;
            if (est_hi - hi2).abs() > tol * hi2 || (est_lo - lo2).abs() > tol * lo2 {
                return Err(format!(
                    "order 2: estimates [{est_lo:e}, {est_hi:e}] vs exact [{lo2:e}, {hi2:e}]"
                ));
            }
        }
        let slack = 1e-12;
        if est_hi > hi * (1.0 + slack) || est_lo < lo * (1.0 - slack) {
            return Err(format!(
                "order {}: estimates [{est_lo:e}, {est_hi:e}] outside exact [{lo:e}, {hi:e}]",
                k + 1
            ));
        }
    }
    Ok(())
}

/// Largest-eigenvalue estimates never decrease and smallest never increase.
pub fn check_lambda_monotone(trace: &SolveTrace) -> Result<(), String> {
    let pairs = |v: &[f64]| -> Vec<(usize, f64, f64)> {
        v.windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].is_finite() && w[1].is_finite())
            .map(|(i, w)| (i, w[0], w[1]))
            .collect()
    };
    for (i, a, b) in pairs(&trace.lambda_max) {
        if b < a {
            return Err(format!("lambda_max decreased at {}: {a:e} -> {b:e}", i + 1));
        }
    }
    for (i, a, b) in pairs(&trace.lambda_min) {
        if b > a {
            return Err(format!("lambda_min increased at {}: {a:e} -> {b:e}", i + 1));
        }
    }
    Ok(())
}

/// Problem with `kappa <= 100`: a geometric diagonal or a scaled random
/// matrix, with a random right-hand side.
pub fn well_conditioned_problem(seed: u64) -> ProblemInstance {
    let mut g = rng(seed);
    let n = g.gen_range(30..120);
    let b = random_vec(&mut g, n);
    let a = if g.gen_bool(0.5) {
        geometric_diagonal(n, g.gen_range(2.0..100.0))
    } else {
        let scaled = random_problem(seed, n);
        if scaled.kappa_a > 100.0 {
            geometric_diagonal(n, 50.0)
        } else {
            scaled.a
        }
    };
    ProblemInstance::with_rhs(a, b, format!("wc-{seed}")).unwrap()
}

/// Largest relative mismatch of `psi` against `||r||^2 / ||p||^2` over
/// `steps` CG steps.
pub fn psi_mismatch(p: &ProblemInstance, steps: usize) -> f64 {
    let mut cg = Hscg::new(p).unwrap();
    let mut st = RitzState::new();
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let step = cg.step().unwrap();
        st.absorb_step(step.alpha, step.beta).unwrap();
        let expect = (norm2(cg.r()) / norm2(cg.p())).powi(2);
        worst = worst.max((st.psi() - expect).abs() / expect);
    }
    worst
}

/// Condition number of the selected columns from an explicit SVD.
pub fn svd_cond(cols: &[Vec<f64>], idx: &[usize]) -> f64 {
    let n = cols[0].len();
    let m = DMatrix::from_fn(n, idx.len(), |i, j| cols[idx[j]][i]);
    let sv = m.singular_values();
    sv.max() / sv.min()
}

pub struct SelectionCase {
    pub s_bar: usize,
    pub bound: f64,
    pub chosen: usize,
    pub brute: usize,
    /// A brute-force condition number lies within 0.1% of the bound.
    pub ambiguous: bool,
}

/// Compares `select_s_tilde` with an SVD brute force on a random monomial
/// basis and a random bound in `[1, 1e6]`.
pub fn selection_case(seed: u64) -> SelectionCase {
    let mut g = rng(seed);
    let n = g.gen_range(40..120);
    let p = random_problem(seed ^ 0xb10c, n);
    let s_bar = g.gen_range(1..=6);
    let bound = 10f64.powf(g.gen_range(0.0..6.0));
    let pv = random_vec(&mut g, n);
    let rv = random_vec(&mut g, n);
    let block = build_block(&p.a, &pv, &rv, &monomial_params(s_bar), s_bar).unwrap();
    let eps = bound * UNIT_ROUNDOFF;
    let (chosen, _) = select_s_tilde(&block.g, s_bar, 1.0, UNIT_ROUNDOFF, eps, 1.0).unwrap();
    let conds: Vec<f64> = (1..=s_bar)
        .map(|i| svd_cond(&block.y, &sub_basis_columns(s_bar, i)))
        .collect();
    let brute = (1..=s_bar).rev().find(|&i| conds[i - 1] <= bound).unwrap_or(1);
    let ambiguous = conds.iter().any(|c| (c / bound - 1.0).abs() < 1e-3);
    SelectionCase {
        s_bar,
        bound,
        chosen,
        brute,
        ambiguous,
    }
}

/// Largest relative difference of CG coefficients between fixed s-step CG
/// with `s = 1` and plain CG over `steps` steps.
pub fn s1_coefficient_mismatch(p: &ProblemInstance, steps: usize) -> Result<f64, String> {
    let (_, _, ref_c) = hscg_solve(p, 1e-300, steps).map_err(|e| e.to_string())?;
    let (_, _, s1) =
        sstep_solve(p, 1, &ParamsSource::Exact(BasisKind::Monomial), 1e-300, steps).map_err(|e| e.to_string())?;
    if ref_c.len() < steps || s1.len() < steps {
        return Err(format!("runs stopped early: {} and {} steps", ref_c.len(), s1.len()));
    }
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    let mut worst: f64 = 0.0;
    for k in 0..steps {
        worst = worst.max(rel(ref_c.alphas[k], s1.alphas[k]));
        if k + 1 < steps {
            worst = worst.max(rel(ref_c.betas[k], s1.betas[k]));
        }
    }
    Ok(worst)
}

/// Checks a Leja sequence against a brute-force scan of the same grid and
/// checks that shorter sequences are its prefixes.
pub fn check_leja(lmin: f64, lmax: f64, s: usize, grid: usize) -> Result<(), String> {
    let thetas = newton_params(lmin, lmax, s, grid).map_err(|e| e.to_string())?.thetas;
    if thetas[0] != lmax || (s > 1 && thetas[1] != lmin) {
        return Err(format!("sequence does not start at the endpoints: {thetas:?}"));
    }
    let step = (lmax - lmin) / (grid - 1) as f64;
    let candidates: Vec<f64> = (0..grid).map(|g| lmin + g as f64 * step).collect();
    for k in 2..s {
        let obj = |x: f64| -> f64 { thetas[..k].iter().map(|t| (x - t).abs().ln()).sum() };
        let best = candidates.iter().map(|&x| obj(x)).fold(f64::NEG_INFINITY, f64::max);
        let got = obj(thetas[k]);
        if got < best - 1e-9 * best.abs().max(1.0) {
            return Err(format!("point {k}: objective {got} below grid maximum {best}"));
        }
        let on_grid = candidates
            .iter()
            .any(|&x| (x - thetas[k]).abs() <= 1e-12 * (lmax - lmin));
        if !on_grid && thetas[k] != lmax {
            return Err(format!("point {k} = {} is not a grid candidate", thetas[k]));
        }
    }
    for k in 1..s {
        let prefix = newton_params(lmin, lmax, k, grid).map_err(|e| e.to_string())?.thetas;
        if prefix[..] != thetas[..k] {
            return Err(format!("length-{k} sequence is not a prefix"));
        }
    }
    Ok(())
}
