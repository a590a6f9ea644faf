//! Hestenes–Stiefel conjugate gradients.

use crate::error::{Error, Result};
use crate::la::{axpy, dot, norm2, spmv, spmv_into, SmallSymMatrix};
use crate::matio::ProblemInstance;
use crate::ritz::RitzState;
use crate::trace::{CgCoefficients, IterationSample, Monitor, SolveTrace, SolverKind, Status, Termination};

/// Iteration cap used when none is given: `100 n`.
pub fn default_max_iters(n: usize) -> usize {
    100 * n.max(1)
}

/// Step-by-step CG state: `x`, `r`, `p` and the last `r^T r`.
#[derive(Debug, Clone)]
pub struct Hscg<'a> {
    problem: &'a ProblemInstance,
    x: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    rr: f64,
}

/// Coefficients of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub alpha: f64,
    pub beta: f64,
}

impl<'a> Hscg<'a> {
    pub fn new(problem: &'a ProblemInstance) -> Result<Self> {
        let ax = spmv(&problem.a, &problem.x0)?;
        let r: Vec<f64> = problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rr = dot(&r, &r);
        Ok(Self {
            problem,
            x: problem.x0.clone(),
            p: r.clone(),
            q: vec![0.0; r.len()],
            r,
            rr,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// One iteration. Fails on `p^T A p <= 0` or non-finite coefficients.
    pub fn step(&mut self) -> Result<Step> {
        spmv_into(&self.problem.a, &self.p, &mut self.q)?;
        let pq = dot(&self.p, &self.q);
        if !(pq > 0.0) {
            return Err(Error::Parameter(format!(
                "p^T A p = {pq:e}, operator not positive definite"
            )));
        }
        let alpha = self.rr / pq;
        if !alpha.is_finite() {
            return Err(Error::Parameter(format!("non-finite step length {alpha:e}")));
        }
        axpy(alpha, &self.p, &mut self.x);
        axpy(-alpha, &self.q, &mut self.r);
        let rr_next = dot(&self.r, &self.r);
        let beta = rr_next / self.rr;
        for (p, r) in self.p.iter_mut().zip(&self.r) {
            *p = r + beta * *p;
        }
        self.rr = rr_next;
        Ok(Step { alpha, beta })
    }

    /// `||b - A x||`
    pub fn true_residual_norm(&self) -> Result<f64> {
        let ax = spmv(&self.problem.a, &self.x)?;
        Ok(self
            .problem
            .b
            .iter()
            .zip(&ax)
            .map(|(b, a)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt())
    }

    fn true_residual(&self) -> Result<Vec<f64>> {
        let ax = spmv(&self.problem.a, &self.x)?;
        Ok(self.problem.b.iter().zip(&ax).map(|(b, a)| b - a).collect())
    }
}

/// Runs CG until the relative true residual drops to `eps_star`, the run
/// stagnates or diverges, or `max_iters` is reached.
pub fn hscg_solve(
    p: &ProblemInstance,
    eps_star: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, SolveTrace, CgCoefficients)> {
    if !(eps_star > 0.0) {
        return Err(Error::Parameter(format!("eps_star must be positive, got {eps_star:e}")));
    }
    run(p, eps_star, max_iters)
}

fn run(p: &ProblemInstance, eps_star: f64, max_iters: usize) -> Result<(Vec<f64>, SolveTrace, CgCoefficients)> {
    let bnorm = p.b_norm();
    let mut trace = SolveTrace::new(SolverKind::Hscg, eps_star);
    let mut coeffs = CgCoefficients::default();
    let mut cg = Hscg::new(p)?;
    if bnorm == 0.0 || norm2(cg.r()) / bnorm <= eps_star {
        trace.termination = Termination::Converged;
        return Ok((cg.x, trace, coeffs));
    }
    let mut ritz = RitzState::new();
    let mut monitor = Monitor::new(norm2(cg.r()) / bnorm);

    trace.termination = Termination::MaxIterations;
    while trace.total_iters < max_iters {
        trace.begin_outer();
        let step = match cg.step() {
            Ok(s) => s,
            Err(e) => {
                trace.termination = Termination::Diverged(e.to_string());
                break;
            }
        };
        coeffs.push(step.alpha, step.beta);
        if step.beta > 0.0 {
            // beta = 0 only when r vanished exactly
            let _ = ritz.absorb_step(step.alpha, step.beta);
        }

        let tr = cg.true_residual()?;
        let true_norm = norm2(&tr);
        let gap = tr
            .iter()
            .zip(cg.r())
            .map(|(t, u)| (t - u) * (t - u))
            .sum::<f64>()
            .sqrt();
        let rel = true_norm / bnorm;
        trace.push(IterationSample {
            true_resid: rel,
            upd_resid: norm2(cg.r()) / bnorm,
            resid_gap: gap,
            c: ritz.current_c(),
            lambda_min: ritz.lambda_min(),
            lambda_max: ritz.lambda_max(),
            psi: ritz.psi(),
            outer: trace.total_outer - 1,
            s_k: 1,
        });
        trace.end_outer(1);

        if rel <= eps_star {
            trace.termination = Termination::Converged;
            break;
        }
        match monitor.observe(rel, norm2(cg.r()) / bnorm, gap / bnorm) {
            Status::Running => {}
            Status::Stagnated => {
                trace.termination = Termination::Stagnated;
                break;
            }
            Status::Diverged(why) => {
                trace.termination = Termination::Diverged(why);
                break;
            }
        }
    }
    Ok((cg.x, trace, coeffs))
}

/// Lanczos tridiagonal `T_i` from the first `i` CG coefficient pairs.
pub fn assemble_tridiag(c: &CgCoefficients, i: usize) -> Result<SmallSymMatrix> {
    if i == 0 {
        return Err(Error::Parameter("tridiagonal order must be at least 1".into()));
    }
    if i > c.alphas.len() || i > c.betas.len() + 1 {
        return Err(Error::Parameter(format!(
            "order {i} exceeds the {} stored coefficients",
            c.alphas.len()
        )));
    }
    let mut t = SmallSymMatrix::zeros(i);
    t.set(0, 0, 1.0 / c.alphas[0]);
    for l in 1..i {
        t.set(l, l, 1.0 / c.alphas[l] + c.betas[l - 1] / c.alphas[l - 1]);
        t.set(l - 1, l, c.betas[l - 1].sqrt() / c.alphas[l - 1]);
    }
    Ok(t)
}

/// Smallest relative true residual CG reaches when run until it stagnates.
pub fn hscg_attainable_accuracy(p: &ProblemInstance, max_iters: usize) -> Result<f64> {
    let (_, trace, _) = run(p, 0.0, max_iters)?;
    if trace.true_resid.is_empty() {
        return Ok(0.0);
    }
    Ok(trace.min_true_resid())
}
