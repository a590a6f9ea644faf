//! Adaptive s-step CG: per-block step counts chosen from basis condition
//! estimates and the accuracy target.

use serde::{Deserialize, Serialize};

use crate::basis::sub_basis_columns;
use crate::basis::{build_block, change_of_basis, BasisKind, BasisParams, LEJA_GRID};
use crate::error::{Error, Result};
use crate::la::{gram_cond_estimate, SmallSymMatrix, UNIT_ROUNDOFF};
use crate::matio::ProblemInstance;
use crate::ritz::{abs_matrix_norm, c_strategy, BlockInfo, CStrategy};
use crate::sstep::{BreakRule, Engine};
use crate::trace::{CgCoefficients, OuterLoopRecord, SolveTrace, SolverKind, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Fixed basis, one condition estimate per block, break on the next
    /// residual estimate.
    Old,
    /// Nested condition estimates, running-max residual, Ritz-driven `c` and
    /// basis refresh after every block.
    Improved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub sigma: usize,
    pub s_bar0: usize,
    pub f: usize,
    pub eps_star: f64,
    pub basis_kind: BasisKind,
    pub c_strategy: CStrategy,
    pub variant: Variant,
    pub max_outer: usize,
    pub leja_grid: usize,
    /// Spectral interval for a fixed Newton/Chebyshev basis in the old
    /// variant. Ignored by the improved variant.
    pub fixed_bounds: Option<(f64, f64)>,
}

impl AdaptiveConfig {
    /// Improved variant with `f = sigma`, `s_bar0 = 1` and the Ritz-based `c`.
    pub fn improved(sigma: usize, eps_star: f64, basis_kind: BasisKind) -> Self {
        Self {
            sigma,
            s_bar0: 1,
            f: sigma,
            eps_star,
            basis_kind,
            c_strategy: CStrategy::Adaptive,
            variant: Variant::Improved,
            max_outer: usize::MAX,
            leja_grid: LEJA_GRID,
            fixed_bounds: None,
        }
    }

    /// Old variant with `f = sigma`, `s_bar0 = 1`, `c = 1` and a monomial
    /// basis.
    pub fn old(sigma: usize, eps_star: f64) -> Self {
        Self {
            basis_kind: BasisKind::Monomial,
            c_strategy: CStrategy::Unit,
            variant: Variant::Old,
            ..Self::improved(sigma, eps_star, BasisKind::Monomial)
        }
    }

    pub fn with_c_strategy(mut self, c: CStrategy) -> Self {
        self.c_strategy = c;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma == 0 || self.s_bar0 == 0 || self.s_bar0 > self.sigma {
            return Err(Error::Config(format!(
                "need 1 <= s_bar0 <= sigma, got s_bar0 = {}, sigma = {}",
                self.s_bar0, self.sigma
            )));
        }
        if !(self.eps_star > 0.0) {
            return Err(Error::Config(format!(
                "eps_star must be positive, got {:e}",
                self.eps_star
            )));
        }
        Ok(())
    }

    fn solver_kind(&self) -> SolverKind {
        match self.variant {
            Variant::Old => SolverKind::AdaptiveOld,
            Variant::Improved => SolverKind::AdaptiveImproved,
        }
    }
}

/// Threshold `eps* / (c u ||r||)` on basis condition numbers.
pub fn condition_bound(eps_star: f64, c: f64, u: f64, r_norm: f64) -> f64 {
    eps_star / (c * u * r_norm)
}

/// Largest `i` in `1..=conds.len()` with `conds[i - 1] <= bound`, at least 1.
pub fn choose_s_tilde(conds: &[f64], bound: f64) -> usize {
    (1..=conds.len()).rev().find(|&i| conds[i - 1] <= bound).unwrap_or(1)
}

/// Picks the block size from the Gram matrix of a size-`s_bar` basis.
///
/// Candidate `i` is judged by the condition estimate of the sub-basis with
/// the first `i + 1` P-columns and the first `i` R-columns. Returns `s_tilde`
/// and the estimates for `i = 1..=s_bar`.
pub fn select_s_tilde(
    g: &SmallSymMatrix,
    s_bar: usize,
    c: f64,
    u: f64,
    eps_star: f64,
    r_norm: f64,
) -> Result<(usize, Vec<f64>)> {
    if s_bar == 0 || g.order() != 2 * s_bar + 1 {
        return Err(Error::Parameter(format!(
            "Gram order {} does not match s_bar = {s_bar}",
            g.order()
        )));
    }
    let conds = (1..=s_bar)
        .map(|i| gram_cond_estimate(g, &sub_basis_columns(s_bar, i)))
        .collect::<Result<Vec<_>>>()?;
    let bound = condition_bound(eps_star, c, u, r_norm);
    Ok((choose_s_tilde(&conds, bound), conds))
}

fn block_info(problem: &ProblemInstance, params: &BasisParams, s: usize) -> Result<BlockInfo> {
    let b = change_of_basis(params, s);
    let tau = abs_matrix_norm(&b, 2 * s + 1)? / problem.norm_a;
    Ok(BlockInfo {
        s,
        n_a: problem.a.n_a(),
        nu: problem.nu(),
        tau,
        kappa: problem.kappa_a,
    })
}

/// Runs adaptive s-step CG with the given configuration.
pub fn adaptive_solve(p: &ProblemInstance, cfg: &AdaptiveConfig) -> Result<(Vec<f64>, SolveTrace, CgCoefficients)> {
    cfg.validate()?;
    let u = UNIT_ROUNDOFF;
    let mut eng = Engine::new(p, cfg.solver_kind(), cfg.eps_star)?;
    if eng.converged_at_start()? {
        return Ok(eng.finish(Termination::Converged));
    }
    let mut params = match cfg.variant {
        Variant::Old => BasisParams::for_kind(cfg.basis_kind, cfg.fixed_bounds, cfg.sigma, cfg.leja_grid),
        Variant::Improved => crate::basis::monomial_params(cfg.sigma),
    };
    let mut s_prev = 0;

    for k in 0..cfg.max_outer {
        let s_bar = if k == 0 {
            cfg.s_bar0
        } else {
            (s_prev + cfg.f).min(cfg.sigma)
        };
        let block = build_block(&p.a, &eng.p, &eng.r, &params, s_bar)?;
        eng.trace.begin_outer();
        let start_iter = eng.trace.total_iters;
        if block.breakdown {
            eng.trace.end_outer(0);
            return Ok(eng.finish(Termination::Diverged("basis breakdown".into())));
        }

        let info_bar = match cfg.c_strategy {
            CStrategy::FullBound => Some(block_info(p, &params, s_bar)?),
            _ => None,
        };
        let c_sel = c_strategy(cfg.c_strategy, &eng.ritz, info_bar.as_ref())?;
        let r_rel = eng.rel_updated();
        let bound = condition_bound(cfg.eps_star, c_sel, u, r_rel);
        let s_tilde = choose_s_tilde(&block.cond_estimates, bound);
        let blk = block.truncate(s_tilde);

        let info = match cfg.c_strategy {
            CStrategy::FullBound => Some(block_info(p, &params, s_tilde)?),
            _ => None,
        };
        let rule = match cfg.variant {
            Variant::Old => BreakRule::Old {
                gamma: blk.cond_of(s_tilde),
                c: c_sel,
            },
            Variant::Improved => BreakRule::Improved {
                strategy: cfg.c_strategy,
                info: info.as_ref(),
            },
        };
        let out = eng.run_block(&blk, rule, k)?;
        eng.trace.blocks.push(OuterLoopRecord {
            k,
            start_iter,
            s_bar,
            s_tilde,
            s_actual: out.steps,
            phi: out.phi,
            c_used: c_sel,
            cond_used: block.cond_estimates.clone(),
            basis: params.clone(),
            break_checks: out.checks.clone(),
        });
        s_prev = out.steps.max(1);
        if let Some(t) = eng.end_outer(&out)? {
            return Ok(eng.finish(t));
        }

        if cfg.variant == Variant::Improved && eng.trace.total_iters > 1 {
            if let Some(bounds) = eng.ritz.spectral_bounds() {
                params = BasisParams::for_kind(cfg.basis_kind, Some(bounds), cfg.sigma, cfg.leja_grid);
            }
        }
    }
    Ok(eng.finish(Termination::MaxIterations))
}
