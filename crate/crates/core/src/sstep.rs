//! Fixed s-step CG and the block engine shared with the adaptive variants.

use crate::basis::{build_block, BasisKind, BasisParams, SStepBlock, LEJA_GRID};
use crate::error::{Error, Result};
use crate::la::{norm2, spmv};
use crate::matio::ProblemInstance;
use crate::ritz::{c_strategy, BlockInfo, CStrategy, RitzState};
use crate::trace::{
    BreakCheck, CgCoefficients, IterationSample, Monitor, OuterLoopRecord, SolveTrace, SolverKind, Status, Termination,
};

/// Coordinates of `x - x_base`, `r` and `p` in a block basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordState {
    pub xp: Vec<f64>,
    pub rp: Vec<f64>,
    pub pp: Vec<f64>,
    pub j: usize,
}

impl CoordState {
    /// `p' = e_0`, `r' = e_{s+1}`, `x' = 0`.
    pub fn initial(s: usize) -> Self {
        let order = 2 * s + 1;
        let mut pp = vec![0.0; order];
        let mut rp = vec![0.0; order];
        pp[0] = 1.0;
        rp[s + 1] = 1.0;
        Self {
            xp: vec![0.0; order],
            rp,
            pp,
            j: 0,
        }
    }
}

/// `sum_j coords[j] * cols[j]`
fn combine(cols: &[Vec<f64>], coords: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (col, &c) in cols.iter().zip(coords) {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(col) {
                *o += c * v;
            }
        }
    }
    out
}

/// `x = x_base + Y x'`, `r = Y r'`, `p = Y p'`.
pub fn recover_iterates(
    block: &SStepBlock,
    coords: &CoordState,
    x_base: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let order = block.order();
    for v in [&coords.xp, &coords.rp, &coords.pp] {
        if v.len() != order {
            return Err(Error::DimensionMismatch {
                expected: order,
                got: v.len(),
            });
        }
    }
    let n = block.y.first().map_or(0, |c| c.len());
    if x_base.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x_base.len(),
        });
    }
    let mut x = combine(&block.y, &coords.xp, n);
    for (xi, bi) in x.iter_mut().zip(x_base) {
        *xi += bi;
    }
    Ok((x, combine(&block.y, &coords.rp, n), combine(&block.y, &coords.pp, n)))
}

/// How an inner loop decides to stop before its last step.
#[derive(Debug, Clone, Copy)]
pub(crate) enum BreakRule<'b> {
    Never,
    /// Break once `gamma >= eps* / (c u ||r'||)`.
    Old {
        gamma: f64,
        c: f64,
    },
    /// Break at `j < s - 1` once `kappa(Y_{j+2}) >= eps* / (c u phi)`, `c`
    /// re-evaluated every step.
    Improved {
        strategy: CStrategy,
        info: Option<&'b BlockInfo>,
    },
}

pub(crate) struct BlockOutcome {
    pub steps: usize,
    pub phi: f64,
    pub checks: Vec<BreakCheck>,
    pub coords: CoordState,
    /// Set when the run must stop (stagnation, divergence, breakdown).
    pub stop: Option<Termination>,
}

/// State carried across outer loops: current iterates, Ritz estimates and
/// the trace.
pub(crate) struct Engine<'a> {
    pub problem: &'a ProblemInstance,
    pub bnorm: f64,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub ritz: RitzState,
    monitor: Monitor,
    pub trace: SolveTrace,
    pub coeffs: CgCoefficients,
}

impl<'a> Engine<'a> {
    pub fn new(problem: &'a ProblemInstance, kind: SolverKind, eps_star: f64) -> Result<Self> {
        if !(eps_star > 0.0) {
            return Err(Error::Parameter(format!("eps_star must be positive, got {eps_star:e}")));
        }
        let ax = spmv(&problem.a, &problem.x0)?;
        let r: Vec<f64> = problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let bnorm = problem.b_norm();
        let rel0 = if bnorm > 0.0 { norm2(&r) / bnorm } else { 0.0 };
        let mut trace = SolveTrace::new(kind, eps_star);
        trace.termination = Termination::MaxIterations;
        Ok(Self {
            problem,
            bnorm,
            x: problem.x0.clone(),
            p: r.clone(),
            r,
            ritz: RitzState::new(),
            monitor: Monitor::new(rel0),
            trace,
            coeffs: CgCoefficients::default(),
        })
    }

    /// `||r|| / ||b||` of the current recovered residual.
    pub fn rel_updated(&self) -> f64 {
        if self.bnorm == 0.0 {
            0.0
        } else {
            norm2(&self.r) / self.bnorm
        }
    }

    /// `||b - A x|| / ||b||` of the current iterate.
    pub fn rel_true(&self) -> Result<f64> {
        if self.bnorm == 0.0 {
            return Ok(0.0);
        }
        let ax = spmv(&self.problem.a, &self.x)?;
        let s: f64 = self.problem.b.iter().zip(&ax).map(|(b, a)| (b - a) * (b - a)).sum();
        Ok(s.sqrt() / self.bnorm)
    }

    /// Runs the inner loop over `block`, recording one trace row per step,
    /// then replaces `x`, `r`, `p` by the recovered iterates.
    pub fn run_block(&mut self, block: &SStepBlock, rule: BreakRule<'_>, outer: usize) -> Result<BlockOutcome> {
        let s = block.s;
        let n = self.problem.n();
        let eps_star = self.trace.eps_star;
        let u = crate::la::UNIT_ROUNDOFF;
        let mut coords = CoordState::initial(s);
        let mut rgr = block.g.bilinear(&coords.rp, &coords.rp);
        let mut phi = rgr.max(0.0).sqrt();
        let mut out = BlockOutcome {
            steps: 0,
            phi,
            checks: Vec::new(),
            coords: CoordState::initial(s),
            stop: None,
        };
        let mut x_rec = self.x.clone();
        let mut r_rec = self.r.clone();

        for j in 0..s {
            let bp = block.apply_b(&coords.pp);
            let den = block.g.bilinear(&coords.pp, &bp);
            if !(den > 0.0) || !(rgr > 0.0) {
                out.stop = Some(Termination::Diverged(format!(
                    "nonpositive Gram quadratic form (p'GBp' = {den:e}, r'Gr' = {rgr:e})"
                )));
                break;
            }
            let alpha = rgr / den;
            for i in 0..coords.xp.len() {
                coords.xp[i] += alpha * coords.pp[i];
                coords.rp[i] -= alpha * bp[i];
            }
            let rgr_next = block.g.bilinear(&coords.rp, &coords.rp);
            let beta = rgr_next / rgr;
            for i in 0..coords.pp.len() {
                coords.pp[i] = coords.rp[i] + beta * coords.pp[i];
            }
            coords.j = j + 1;
            rgr = rgr_next;
            out.steps = j + 1;
            self.coeffs.push(alpha, beta);
            if beta > 0.0 && alpha.is_finite() {
                let _ = self.ritz.absorb_step(alpha, beta);
            }
            let est = rgr.max(0.0).sqrt();
            phi = phi.max(est);

            let c = match rule {
                BreakRule::Never => self.ritz.current_c(),
                BreakRule::Old { c, .. } => c,
                BreakRule::Improved { strategy, info } => c_strategy(strategy, &self.ritz, info)?,
            };

            x_rec = combine(&block.y, &coords.xp, n);
            for (xi, bi) in x_rec.iter_mut().zip(&self.x) {
                *xi += bi;
            }
            r_rec = combine(&block.y, &coords.rp, n);
            let ax = spmv(&self.problem.a, &x_rec)?;
            let mut true_sq = 0.0;
            let mut gap_sq = 0.0;
            for i in 0..n {
                let t = self.problem.b[i] - ax[i];
                true_sq += t * t;
                gap_sq += (t - r_rec[i]) * (t - r_rec[i]);
            }
            let rel_true = true_sq.sqrt() / self.bnorm;
            let rel_upd = norm2(&r_rec) / self.bnorm;
            self.trace.push(IterationSample {
                true_resid: rel_true,
                upd_resid: rel_upd,
                resid_gap: gap_sq.sqrt(),
                c,
                lambda_min: self.ritz.lambda_min(),
                lambda_max: self.ritz.lambda_max(),
                psi: self.ritz.psi(),
                outer,
                s_k: s,
            });

            match self.monitor.observe(rel_true, rel_upd, gap_sq.sqrt() / self.bnorm) {
                Status::Running => {}
                Status::Stagnated => {
                    out.stop = Some(Termination::Stagnated);
                    break;
                }
                Status::Diverged(why) => {
                    out.stop = Some(Termination::Diverged(why));
                    break;
                }
            }
            if rgr_next.is_nan() {
                out.stop = Some(Termination::Diverged("NaN Gram quadratic form".into()));
                break;
            }
            if j + 1 == s {
                break;
            }
            if est / self.bnorm <= eps_star {
                break;
            }
            match rule {
                BreakRule::Never => {}
                BreakRule::Old { gamma, c } => {
                    let threshold = eps_star / (c * u * est / self.bnorm);
                    let fired = gamma >= threshold;
                    out.checks.push(BreakCheck {
                        j,
                        gamma,
                        threshold,
                        fired,
                    });
                    if fired {
                        break;
                    }
                }
                BreakRule::Improved { .. } => {
                    let gamma = block.cond_of(j + 2);
                    let threshold = eps_star / (c * u * phi / self.bnorm);
                    let fired = gamma >= threshold;
                    out.checks.push(BreakCheck {
                        j,
                        gamma,
                        threshold,
                        fired,
                    });
                    if fired {
                        break;
                    }
                }
            }
        }

        out.phi = phi;
        if out.steps > 0 {
            out.coords = coords.clone();
            self.x = x_rec;
            self.r = r_rec;
            self.p = combine(&block.y, &coords.pp, n);
        }
        Ok(out)
    }

    /// Closes an outer loop; returns the termination if the run is over.
    pub fn end_outer(&mut self, out: &BlockOutcome) -> Result<Option<Termination>> {
        self.trace.end_outer(out.steps);
        if let Some(t) = &out.stop {
            return Ok(Some(t.clone()));
        }
        let last = self.trace.true_resid.last().copied();
        let rel = match last {
            Some(v) => v,
            None => self.rel_true()?,
        };
        if rel <= self.trace.eps_star {
            return Ok(Some(Termination::Converged));
        }
        Ok(None)
    }

    /// Converged before any work, e.g. `b = 0` or an exact start.
    pub fn converged_at_start(&self) -> Result<bool> {
        Ok(self.rel_true()? <= self.trace.eps_star)
    }

    pub fn finish(mut self, termination: Termination) -> (Vec<f64>, SolveTrace, CgCoefficients) {
        self.trace.termination = termination;
        (self.x, self.trace, self.coeffs)
    }
}

/// Basis choice for fixed s-step runs.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    /// Use these coefficients as given.
    Params(BasisParams),
    /// Build coefficients of this kind on a fixed interval.
    Bounds { kind: BasisKind, lmin: f64, lmax: f64 },
    /// Build coefficients of this kind on the operator's spectral interval.
    Exact(BasisKind),
}

impl Default for ParamsSource {
    fn default() -> Self {
        ParamsSource::Exact(BasisKind::Monomial)
    }
}

impl ParamsSource {
    pub fn resolve(&self, problem: &ProblemInstance, s: usize, grid: usize) -> Result<BasisParams> {
        let params = match self {
            ParamsSource::Params(p) => p.clone(),
            ParamsSource::Bounds { kind, lmin, lmax } => match kind {
                BasisKind::Monomial => crate::basis::monomial_params(s),
                BasisKind::Newton => crate::basis::newton_params(*lmin, *lmax, s, grid)?,
                BasisKind::Chebyshev => crate::basis::chebyshev_params(*lmin, *lmax, s)?,
            },
            ParamsSource::Exact(kind) => {
                let bounds = (problem.lambda_min, problem.norm_a);
                BasisParams::for_kind(*kind, Some(bounds), s, grid)
            }
        };
        if params.max_s() < s {
            return Err(Error::Parameter(format!(
                "basis parameters cover s = {}, need {s}",
                params.max_s()
            )));
        }
        Ok(params)
    }
}

/// Runs fixed s-step CG: `s` inner steps per outer loop, one Gram matrix per
/// block. Stops at an outer boundary once the relative true residual is at
/// most `eps_star`, or on stagnation, divergence or `max_outer` blocks.
pub fn sstep_solve(
    p: &ProblemInstance,
    s: usize,
    params_source: &ParamsSource,
    eps_star: f64,
    max_outer: usize,
) -> Result<(Vec<f64>, SolveTrace, CgCoefficients)> {
    if s == 0 {
        return Err(Error::Parameter("s must be at least 1".into()));
    }
    let params = params_source.resolve(p, s, LEJA_GRID)?;
    let mut eng = Engine::new(p, SolverKind::Sstep, eps_star)?;
    if eng.converged_at_start()? {
        return Ok(eng.finish(Termination::Converged));
    }
    for k in 0..max_outer {
        let block = build_block(&p.a, &eng.p, &eng.r, &params, s)?;
        eng.trace.begin_outer();
        if block.breakdown {
            eng.trace.end_outer(0);
            return Ok(eng.finish(Termination::Diverged("basis breakdown".into())));
        }
        let out = eng.run_block(&block, BreakRule::Never, k)?;
        eng.trace.blocks.push(OuterLoopRecord {
            k,
            start_iter: *eng.trace.outer_marks.last().unwrap(),
            s_bar: s,
            s_tilde: s,
            s_actual: out.steps,
            phi: out.phi,
            c_used: f64::NAN,
            cond_used: block.cond_estimates.clone(),
            basis: params.clone(),
            break_checks: out.checks.clone(),
        });
        if let Some(t) = eng.end_outer(&out)? {
            return Ok(eng.finish(t));
        }
    }
    Ok(eng.finish(Termination::MaxIterations))
}
