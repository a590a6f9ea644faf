//! Incremental estimates of the extremal Ritz values from CG coefficients and
//! the error-to-residual constant `c` derived from them.
//!
//! The CG coefficients define the Cholesky factor `L_i^T` of the Lanczos
//! tridiagonal `T_i = L_i L_i^T` with diagonal `zeta_l = 1/sqrt(alpha_l)` and
//! superdiagonal `eta_l = sqrt(beta_l / alpha_l)`. `||L_i||^2` and
//! `||L_i^{-1}||^2` are tracked by incremental norm estimation, one row of
//! `L_i^T` per CG iteration. Both estimates are one-sided: `lambda_max` never
//! exceeds `lambda_max(T_i)` and `lambda_min` never drops below
//! `lambda_min(T_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::la::{sym_eig, SmallSymMatrix, UNIT_ROUNDOFF};

/// `u^{-1/2}`, the value of `c` before two CG steps are available.
pub fn initial_c() -> f64 {
    1.0 / UNIT_ROUNDOFF.sqrt()
}

/// Incremental estimate of `||L_i||^2 = lambda_max(T_i)`.
#[derive(Debug, Clone, Default)]
pub struct LmaxEstimator {
    omega: f64,
    h: f64,
    initialized: bool,
    last_zeta2: f64,
    count: usize,
}

impl LmaxEstimator {
    /// Absorbs the next row of `L_i^T` as squared entries: `zeta2 = zeta^2`
    /// of the new diagonal and `eta2 = eta^2` of the superdiagonal linking it
    /// to the previous row.
    fn absorb(&mut self, zeta2: f64, eta2: f64) {
        if !self.initialized {
            self.omega = zeta2;
            self.h = 1.0;
            self.initialized = true;
        } else {
            let d = self.last_zeta2 * eta2 * self.h;
            let a = eta2 + zeta2;
            let diff = self.omega - a;
            let chi = (diff * diff + 4.0 * d).sqrt();
            let h_next = if chi > 0.0 { 0.5 * (1.0 - diff / chi) } else { 0.0 };
            self.omega += chi * h_next;
            self.h = h_next;
        }
        self.last_zeta2 = zeta2;
        self.count += 1;
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Incremental estimate of `||L_i^{-1}||^2 = 1 / lambda_min(T_i)`.
#[derive(Debug, Clone, Default)]
pub struct LminEstimator {
    omega: f64,
    a: f64,
    d: f64,
    g: f64,
    h: f64,
    initialized: bool,
    count: usize,
}

impl LminEstimator {
    /// `alpha = 1 / zeta2` is passed exactly.
    fn absorb(&mut self, zeta2: f64, eta2: f64, alpha: f64) {
        if !self.initialized {
            self.omega = alpha;
            self.a = self.omega;
            self.d = 0.0;
            self.g = 0.0;
            self.h = 1.0;
            self.initialized = true;
        } else {
            let d_next = -(eta2 / zeta2).sqrt() * (self.g * self.d + self.h * self.a);
            let a_next = (eta2 * self.a + 1.0) * alpha;
            let diff = self.omega - a_next;
            let chi = (diff * diff + 4.0 * d_next * d_next).sqrt();
            let h2 = if chi > 0.0 {
                (0.5 * (1.0 - diff / chi)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            self.omega += chi * h2;
            self.g = (1.0 - h2).sqrt();
            let h = h2.sqrt();
            self.h = if d_next < 0.0 { -h } else { h };
            self.d = d_next;
            self.a = a_next;
        }
        self.count += 1;
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Running Ritz-value and error-ratio state, one `(alpha, beta)` pair per
/// global CG iteration.
#[derive(Debug, Clone)]
pub struct RitzState {
    lmax_est: LmaxEstimator,
    lmin_est: LminEstimator,
    last_alpha: f64,
    last_beta: f64,
    psi: f64,
    c: f64,
}

impl Default for RitzState {
    fn default() -> Self {
        Self::new()
    }
}

impl RitzState {
    pub fn new() -> Self {
        Self {
            lmax_est: LmaxEstimator::default(),
            lmin_est: LminEstimator::default(),
            last_alpha: 0.0,
            last_beta: 0.0,
            psi: 1.0,
            c: initial_c(),
        }
    }

    /// Absorbs the coefficients `alpha_i`, `beta_i` of global iteration `i`.
    ///
    /// `alpha_i` extends the bidiagonal factor; `beta_i` is kept for the next
    /// row and advances `psi_{i+1} = psi_i / (psi_i + beta_i)`.
    pub fn absorb_step(&mut self, alpha: f64, beta: f64) -> Result<()> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Parameter(format!("nonpositive alpha {alpha:e}")));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("nonpositive beta {beta:e}")));
        }
        let zeta2 = 1.0 / alpha;
        let eta2 = if self.steps() > 0 {
            self.last_beta / self.last_alpha
        } else {
            0.0
        };
        self.lmax_est.absorb(zeta2, eta2);
        self.lmin_est.absorb(zeta2, eta2, alpha);
        self.last_alpha = alpha;
        self.last_beta = beta;
        self.psi /= self.psi + beta;
        if self.steps() >= 2 {
            self.c = 1f64.max(self.lambda_max() * (self.psi / self.lambda_min()).sqrt());
        }
        Ok(())
    }

    /// Number of absorbed iterations.
    pub fn steps(&self) -> usize {
        self.lmax_est.count()
    }

    /// Current `lambda_max` estimate (`NaN` before the first step).
    pub fn lambda_max(&self) -> f64 {
        if self.steps() == 0 {
            f64::NAN
        } else {
            self.lmax_est.omega()
        }
    }

    /// Current `lambda_min` estimate (`NaN` before the first step).
    pub fn lambda_min(&self) -> f64 {
        if self.steps() == 0 {
            f64::NAN
        } else {
            1.0 / self.lmin_est.omega()
        }
    }

    /// Both estimates once at least two steps were absorbed and they differ.
    pub fn spectral_bounds(&self) -> Option<(f64, f64)> {
        let (lmin, lmax) = (self.lambda_min(), self.lambda_max());
        (self.steps() >= 2 && lmin < lmax).then_some((lmin, lmax))
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// `max{1, lambda_max * sqrt(psi / lambda_min)}` after two steps,
    /// `u^{-1/2}` before.
    pub fn current_c(&self) -> f64 {
        self.c
    }

    pub fn lmax_estimator(&self) -> &LmaxEstimator {
        &self.lmax_est
    }

    pub fn lmin_estimator(&self) -> &LminEstimator {
        &self.lmin_est
    }

    /// Test hook: a state with prescribed estimates.
    #[doc(hidden)]
    pub fn with_estimates(lambda_min: f64, lambda_max: f64, psi: f64) -> Self {
        let mut s = Self::new();
        s.lmax_est = LmaxEstimator {
            omega: lambda_max,
            h: 1.0,
            initialized: true,
            last_zeta2: 1.0,
            count: 2,
        };
        s.lmin_est = LminEstimator {
            omega: 1.0 / lambda_min,
            a: 1.0,
            d: 0.0,
            g: 0.0,
            h: 1.0,
            initialized: true,
            count: 2,
        };
        s.psi = psi;
        s.c = 1f64.max(lambda_max * (psi / lambda_min).sqrt());
        s
    }
}

/// How the constant `c` in the basis-condition bound is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CStrategy {
    /// `max{1, lambda_max * sqrt(psi / lambda_min)}` from the Ritz estimates.
    Adaptive,
    /// `c = 1`.
    Unit,
    /// `lambda_max / lambda_min` from the Ritz estimates.
    KappaEstimate,
    /// The full rounding-error constant.
    FullBound,
}

impl CStrategy {
    pub fn name(self) -> &'static str {
        match self {
            CStrategy::Adaptive => "adaptive",
            CStrategy::Unit => "unit",
            CStrategy::KappaEstimate => "kappa",
            CStrategy::FullBound => "full",
        }
    }
}

impl std::str::FromStr for CStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adaptive" | "xi" => Ok(CStrategy::Adaptive),
            "unit" | "one" | "1" => Ok(CStrategy::Unit),
            "kappa" | "kappa-estimate" | "kappaestimate" => Ok(CStrategy::KappaEstimate),
            "full" | "full-bound" | "fullbound" => Ok(CStrategy::FullBound),
            other => Err(Error::Config(format!("unknown c strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for CStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Quantities of one outer loop needed by [`CStrategy::FullBound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockInfo {
    pub s: usize,
    pub n_a: usize,
    /// `|| |A| || / ||A||`
    pub nu: f64,
    /// `|| |B| || / ||A||` for the change-of-basis matrix `B`.
    pub tau: f64,
    pub kappa: f64,
}

/// `2s (2(3 + N_A) nu t + (6 + 8t) tau + 2t^3 + 3) kappa` with `t = sqrt(2s+1)`.
pub fn full_bound_c(info: &BlockInfo) -> f64 {
    let s = info.s as f64;
    let t = (2.0 * s + 1.0).sqrt();
    2.0 * s
        * (2.0 * (3.0 + info.n_a as f64) * info.nu * t + (6.0 + 8.0 * t) * info.tau + 2.0 * t * t * t + 3.0)
        * info.kappa
}

/// `|| |B| ||_2` of a small dense (row-major, `order x order`) matrix via the
/// eigenvalues of `|B|^T |B|`.
pub fn abs_matrix_norm(b: &[f64], order: usize) -> Result<f64> {
    let abs: Vec<f64> = b.iter().map(|v| v.abs()).collect();
    let btb = SmallSymMatrix::from_upper_fn(order, |i, j| {
        (0..order).map(|k| abs[k * order + i] * abs[k * order + j]).sum()
    });
    let eig = sym_eig(&btb)?;
    Ok(eig[order - 1].max(0.0).sqrt())
}

/// Evaluates `c` for the given strategy.
pub fn c_strategy(kind: CStrategy, state: &RitzState, block_info: Option<&BlockInfo>) -> Result<f64> {
    match kind {
        CStrategy::Adaptive => Ok(state.current_c()),
        CStrategy::Unit => Ok(1.0),
        CStrategy::KappaEstimate => Ok(if state.steps() >= 2 {
            state.lambda_max() / state.lambda_min()
        } else {
            initial_c()
        }),
        CStrategy::FullBound => block_info.map(full_bound_c).ok_or(Error::MissingBlockInfo),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_gives_one_by_one_tridiagonal() {
        let mut s = RitzState::new();
        s.absorb_step(4.0, 0.5).unwrap();
        assert_eq!(s.lambda_max(), 0.25);
        assert_eq!(s.lambda_min(), 0.25);
        assert_eq!(s.current_c(), initial_c());
    }

    #[test]
    fn second_step_is_exact() {
        let mut s = RitzState::new();
        s.absorb_step(1.0, 1.0).unwrap();
        s.absorb_step(1.0, 1.0).unwrap();
        let r5 = 5f64.sqrt();
        assert_relative_eq!(s.lambda_max(), (3.0 + r5) / 2.0, max_relative = 4.0 * f64::EPSILON);
        assert_relative_eq!(s.lambda_min(), (3.0 - r5) / 2.0, max_relative = 4.0 * f64::EPSILON);
    }

    #[test]
    fn psi_recurrence() {
        let mut s = RitzState::new();
        assert_eq!(s.psi(), 1.0);
        s.absorb_step(2.0, 1.0).unwrap();
        assert_eq!(s.psi(), 0.5);
    }

    #[test]
    fn c_values() {
        let fresh = RitzState::new();
        assert_relative_eq!(fresh.current_c(), 2f64.powf(26.5), max_relative = 1e-15);
        let s = RitzState::with_estimates(0.5, 2.0, 0.125);
        assert_eq!(s.current_c(), 1.0);
        let s = RitzState::with_estimates(1.0, 1e4, 1.0);
        assert_eq!(s.current_c(), 1e4);
    }

    #[test]
    fn strategies() {
        let s = RitzState::with_estimates(0.382, 2.618, 0.3);
        assert_eq!(c_strategy(CStrategy::Unit, &s, None).unwrap(), 1.0);
        assert_relative_eq!(
            c_strategy(CStrategy::KappaEstimate, &s, None).unwrap(),
            6.853403,
            max_relative = 1e-6
        );
        assert!(matches!(
            c_strategy(CStrategy::FullBound, &s, None),
            Err(Error::MissingBlockInfo)
        ));
        let info = BlockInfo {
            s: 1,
            n_a: 1,
            nu: 1.0,
            tau: 1.0,
            kappa: 1.0,
        };
        let expected = 2.0 * (9.0 + 22.0 * 3f64.sqrt());
        assert_relative_eq!(
            c_strategy(CStrategy::FullBound, &s, Some(&info)).unwrap(),
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected, 94.2102, max_relative = 1e-5);
    }

    #[test]
    fn rejects_nonpositive_coefficients() {
        let mut s = RitzState::new();
        assert!(s.absorb_step(0.0, 1.0).is_err());
        assert!(s.absorb_step(1.0, -1.0).is_err());
        assert!(s.absorb_step(f64::NAN, 1.0).is_err());
        assert_eq!(s.steps(), 0);
    }

    #[test]
    fn abs_norm_of_diagonal() {
        let b = [-3.0, 0.0, 0.0, 2.0];
        assert_relative_eq!(abs_matrix_norm(&b, 2).unwrap(), 3.0, max_relative = 1e-14);
        // |[[1,-1],[1,1]]| = all-ones, norm 2
        let b = [1.0, -1.0, 1.0, 1.0];
        assert_relative_eq!(abs_matrix_norm(&b, 2).unwrap(), 2.0, max_relative = 1e-14);
    }
}
