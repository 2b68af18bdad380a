use std::time::Duration;

use crate::error::{Error, Result};
use crate::inner::{InnerTolerance, DEFAULT_MAX_INNER};
use crate::linalg::DEFAULT_NORM_ITERS;
use crate::Scalar;

/// Gains of the controller acting on `ln ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
    /// Largest change of `ln ω` in one update; `+∞` disables the limit.
    pub max_step: T,
}

pub const DEFAULT_PID_MAX_STEP: f64 = 0.5;

impl<T: Scalar> PidGains<T> {
    pub fn new(kp: T, ki: T, kd: T) -> Self {
        PidGains {
            kp,
            ki,
            kd,
            max_step: T::lit(DEFAULT_PID_MAX_STEP),
        }
    }

    pub fn with_max_step(self, max_step: T) -> Self {
        PidGains { max_step, ..self }
    }

    pub fn zero() -> Self {
        PidGains::new(T::zero(), T::zero(), T::zero())
    }
}

impl<T: Scalar> Default for PidGains<T> {
    fn default() -> Self {
        PidGains::new(T::lit(0.5), T::lit(0.02), T::lit(0.1))
    }
}

/// Restart rule on the max-KKT residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartParams<T> {
    pub beta_sufficient: T,
    pub beta_necessary: T,
    pub max_round_len: usize,
}

impl<T: Scalar> Default for RestartParams<T> {
    fn default() -> Self {
        RestartParams {
            beta_sufficient: T::lit(0.2),
            beta_necessary: T::lit(0.8),
            max_round_len: 2000,
        }
    }
}

/// Which earlier iterate the over-relaxation term pulls against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reflection {
    /// `z⁺ = (k+1)/(k+2)·((1+θ)·T(z^k) − θ·z^k) + 1/(k+2)·z⁰`
    #[default]
    Current,
    /// `z⁺ = (1+θ)·((k+1)/(k+2)·T(z^k) + 1/(k+2)·z⁰) − θ·z^{k−1}`
    Previous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams<T> {
    pub eps_tol: T,
    pub eps_inf: T,
    pub theta: T,
    pub reflection: Reflection,
    /// Anchor the iterates toward the round start. `false` gives plain
    /// (reflected) PDHG.
    pub halpern: bool,
    pub eta_scale: T,
    /// Safety factor applied to the estimated `‖A‖`.
    pub norm_inflation: T,
    pub norm_iters: usize,
    pub norm_seed: u64,
    pub pid: PidGains<T>,
    pub omega0: T,
    /// `None` disables restarts (and with them the weight updates).
    pub restart: Option<RestartParams<T>>,
    pub iter_limit: usize,
    pub time_limit: Option<Duration>,
    pub check_every: usize,
    /// Initial inner tolerance and its update rule; use
    /// [`InnerTolerance::fixed`] to pin it.
    pub inner_tol: InnerTolerance<T>,
    pub max_inner: usize,
    /// Curvature scale of the unboundedness test; `1 + ‖Q‖∞` when `None`.
    pub gamma_sys: Option<T>,
}

impl<T: Scalar> Default for SolverParams<T> {
    fn default() -> Self {
        SolverParams {
            eps_tol: T::lit(1e-6),
            eps_inf: T::lit(1e-8),
            theta: T::lit(0.5),
            reflection: Reflection::Current,
            halpern: true,
            eta_scale: T::lit(0.998),
            norm_inflation: T::lit(1.01),
            norm_iters: DEFAULT_NORM_ITERS,
            norm_seed: 0x5eed,
            pid: PidGains::default(),
            omega0: T::one(),
            restart: Some(RestartParams::default()),
            iter_limit: 1_000_000,
            time_limit: None,
            check_every: 64,
            inner_tol: InnerTolerance::default(),
            max_inner: DEFAULT_MAX_INNER,
            gamma_sys: None,
        }
    }
}

impl<T: Scalar> SolverParams<T> {
    pub fn with_tol(eps_tol: T) -> Self {
        SolverParams {
            eps_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.eps_tol) {
            return bad("eps_tol must be positive and finite");
        }
        if !positive(self.eps_inf) {
            return bad("eps_inf must be positive and finite");
        }
        if !(self.theta >= T::zero() && self.theta < T::one()) {
            return bad("theta must lie in [0, 1)");
        }
        if !positive(self.eta_scale) || !positive(self.norm_inflation) {
            return bad("eta_scale and norm_inflation must be positive");
        }
        if !positive(self.omega0) {
            return bad("omega0 must be positive and finite");
        }
        let PidGains { kp, ki, kd, max_step } = self.pid;
        if !(kp.is_finite() && ki.is_finite() && kd.is_finite()) {
            return bad("PID gains must be finite");
        }
        if !(max_step > T::zero()) {
            return bad("PID max_step must be positive");
        }
        if let Some(r) = &self.restart {
            let unit = |v: T| v > T::zero() && v < T::one();
            if !unit(r.beta_sufficient) || !unit(r.beta_necessary) {
                return bad("restart betas must lie in (0, 1)");
            }
            if r.beta_sufficient >= r.beta_necessary {
                return bad("beta_sufficient must be below beta_necessary");
            }
            if r.max_round_len == 0 {
                return bad("max_round_len must be positive");
            }
        }
        if self.check_every == 0 {
            return bad("check_every must be positive");
        }
        let tol = &self.inner_tol;
        if !positive(tol.current) || !positive(tol.floor) || tol.scale < T::zero() {
            return bad("inner tolerance must be positive");
        }
        if let Some(g) = self.gamma_sys {
            if !positive(g) {
                return bad("gamma_sys must be positive");
            }
        }
        Ok(())
    }
}
