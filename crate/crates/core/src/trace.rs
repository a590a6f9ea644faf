//! Per-iteration solve records and outcome classification.

use serde::{Deserialize, Serialize};

use crate::basis::BasisParams;

/// Iterations without a new minimum of the true relative residual before a
/// run counts as stagnated.
pub const STAGNATION_WINDOW: usize = 200;

/// Iterations without a new minimum after which a run stagnates even while
/// its updated residual is still above the residual gap.
pub const STAGNATION_HARD_WINDOW: usize = 10 * STAGNATION_WINDOW;

/// Relative true residual above which a run counts as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Hscg,
    Sstep,
    AdaptiveOld,
    AdaptiveImproved,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Hscg => "hscg",
            SolverKind::Sstep => "sstep",
            SolverKind::AdaptiveOld => "adaptive-old",
            SolverKind::AdaptiveImproved => "adaptive-improved",
        }
    }

    pub fn all() -> [SolverKind; 4] {
        [
            SolverKind::Hscg,
            SolverKind::Sstep,
            SolverKind::AdaptiveOld,
            SolverKind::AdaptiveImproved,
        ]
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hscg" | "cg" => Ok(SolverKind::Hscg),
            "sstep" | "s-step" => Ok(SolverKind::Sstep),
            "adaptive-old" | "old" => Ok(SolverKind::AdaptiveOld),
            "adaptive-improved" | "improved" | "adaptive" => Ok(SolverKind::AdaptiveImproved),
            other => Err(crate::Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Converged,
    Stagnated,
    Diverged(String),
    MaxIterations,
}

/// CG step lengths and direction weights, one pair per global iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CgCoefficients {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl CgCoefficients {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn push(&mut self, alpha: f64, beta: f64) {
        self.alphas.push(alpha);
        self.betas.push(beta);
    }
}

/// One inner-loop break test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakCheck {
    pub j: usize,
    pub gamma: f64,
    pub threshold: f64,
    pub fired: bool,
}

/// What happened in one outer loop.
#[derive(Debug, Clone)]
pub struct OuterLoopRecord {
    pub k: usize,
    pub start_iter: usize,
    pub s_bar: usize,
    pub s_tilde: usize,
    pub s_actual: usize,
    /// Largest estimated residual norm seen in the block.
    pub phi: f64,
    /// `c` used when choosing `s_tilde`.
    pub c_used: f64,
    /// Condition estimates of the nested sub-bases, index `i - 1` for `i`.
    pub cond_used: Vec<f64>,
    pub basis: BasisParams,
    pub break_checks: Vec<BreakCheck>,
}

/// Everything a solve records, one entry per global iteration unless noted.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub solver: SolverKind,
    pub eps_star: f64,
    /// `||b - A x_i|| / ||b||`
    pub true_resid: Vec<f64>,
    /// `||r_i|| / ||b||` of the recursively updated residual.
    pub upd_resid: Vec<f64>,
    /// `||(b - A x_i) - r_i||`
    pub resid_gap: Vec<f64>,
    pub c_values: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub lambda_max: Vec<f64>,
    pub psi: Vec<f64>,
    pub outer_index: Vec<usize>,
    pub s_k: Vec<usize>,
    /// Global iteration index at which each outer loop begins.
    pub outer_marks: Vec<usize>,
    /// Inner steps taken per outer loop.
    pub s_schedule: Vec<usize>,
    pub blocks: Vec<OuterLoopRecord>,
    pub termination: Termination,
    pub total_iters: usize,
    pub total_outer: usize,
}

/// Values recorded for one global iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationSample {
    pub true_resid: f64,
    pub upd_resid: f64,
    pub resid_gap: f64,
    pub c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub psi: f64,
    pub outer: usize,
    pub s_k: usize,
}

impl SolveTrace {
    pub fn new(solver: SolverKind, eps_star: f64) -> Self {
        Self {
            solver,
            eps_star,
            true_resid: Vec::new(),
            upd_resid: Vec::new(),
            resid_gap: Vec::new(),
            c_values: Vec::new(),
            lambda_min: Vec::new(),
            lambda_max: Vec::new(),
            psi: Vec::new(),
            outer_index: Vec::new(),
            s_k: Vec::new(),
            outer_marks: Vec::new(),
            s_schedule: Vec::new(),
            blocks: Vec::new(),
            termination: Termination::MaxIterations,
            total_iters: 0,
            total_outer: 0,
        }
    }

    pub fn push(&mut self, s: IterationSample) {
        self.true_resid.push(s.true_resid);
        self.upd_resid.push(s.upd_resid);
        self.resid_gap.push(s.resid_gap);
        self.c_values.push(s.c);
        self.lambda_min.push(s.lambda_min);
        self.lambda_max.push(s.lambda_max);
        self.psi.push(s.psi);
        self.outer_index.push(s.outer);
        self.s_k.push(s.s_k);
        self.total_iters += 1;
    }

    /// Marks the start of an outer loop at the current global index.
    pub fn begin_outer(&mut self) {
        self.outer_marks.push(self.total_iters);
        self.total_outer += 1;
    }

    /// Records the number of inner steps of the outer loop just finished.
    pub fn end_outer(&mut self, steps: usize) {
        self.s_schedule.push(steps);
        let start = *self.outer_marks.last().expect("begin_outer not called");
        for s in &mut self.s_k[start..] {
            *s = steps;
        }
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn stagnated(&self) -> bool {
        matches!(self.termination, Termination::Stagnated | Termination::MaxIterations)
    }

    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged(_))
    }

    pub fn final_true_resid(&self) -> f64 {
        self.true_resid.last().copied().unwrap_or(f64::NAN)
    }

    /// Smallest finite relative true residual observed.
    pub fn min_true_resid(&self) -> f64 {
        self.true_resid
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean inner steps per outer loop.
    pub fn mean_s(&self) -> f64 {
        if self.s_schedule.is_empty() {
            return 0.0;
        }
        self.s_schedule.iter().sum::<usize>() as f64 / self.s_schedule.len() as f64
    }
}

/// Tracks stagnation and divergence of the true residual.
#[derive(Debug, Clone)]
pub(crate) struct Monitor {
    best: f64,
    since_best: usize,
}

pub(crate) enum Status {
    Running,
    Stagnated,
    Diverged(String),
}

impl Monitor {
    pub(crate) fn new(initial: f64) -> Self {
        Self {
            best: initial,
            since_best: 0,
        }
    }

    /// `rel_upd` and `rel_gap` are the updated residual and the residual gap,
    /// both relative to `||b||`. Stagnation needs `STAGNATION_WINDOW`
    /// iterations without a new minimum and `rel_upd <= rel_gap`, or
    /// `STAGNATION_HARD_WINDOW` iterations without a new minimum.
    pub(crate) fn observe(&mut self, rel_true: f64, rel_upd: f64, rel_gap: f64) -> Status {
        if rel_true.is_nan() {
            return Status::Diverged("NaN residual".into());
        }
        if rel_true > DIVERGENCE_LIMIT {
            return Status::Diverged(format!("relative residual {rel_true:e}"));
        }
        if rel_true < self.best {
            self.best = rel_true;
            self.since_best = 0;
        } else {
            self.since_best += 1;
            let gap_bound = rel_upd <= rel_gap;
            if (self.since_best >= STAGNATION_WINDOW && gap_bound) || self.since_best >= STAGNATION_HARD_WINDOW {
                return Status::Stagnated;
            }
        }
        Status::Running
    }
}

/// Classified outcome of a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Converged { outer: usize, total: usize },
    Stagnated { attained: f64 },
    Diverged,
}

impl Outcome {
    /// Table cell: `outer (total)`, `– [x.xe-yy]` or `–`.
    pub fn cell(&self) -> String {
        match self {
            Outcome::Converged { outer, total } => format!("{outer} ({total})"),
            Outcome::Stagnated { attained } => format!("\u{2013} [{}]", sci1(*attained)),
            Outcome::Diverged => "\u{2013}".to_string(),
        }
    }
}

/// Classifies a finished trace. Runs that stopped without reaching the
/// tolerance report the final attained relative residual.
pub fn attained_accuracy_report(trace: &SolveTrace) -> Outcome {
    match &trace.termination {
        Termination::Converged => Outcome::Converged {
            outer: trace.total_outer,
            total: trace.total_iters,
        },
        Termination::Diverged(_) => Outcome::Diverged,
        Termination::Stagnated | Termination::MaxIterations => {
            let attained = trace.final_true_resid();
            if attained.is_finite() {
                Outcome::Stagnated { attained }
            } else {
                Outcome::Diverged
            }
        }
    }
}

/// `%.1e` with an explicitly signed exponent of at least two digits.
pub fn sci1(v: f64) -> String {
    let s = format!("{v:.1e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mant}e{sign}{digits:0>2}")
        }
        None => s,
    }
}
