//! Outer loop: PDHG steps with reflected Halpern anchoring, restart rounds
//! and a PID-controlled primal–dual weight.

mod params;
mod result;
mod state;

use std::time::Instant;

pub use params::{PidGains, Reflection, RestartParams, SolverParams, DEFAULT_PID_MAX_STEP};
pub use result::{Progress, SolveResult, Status};
pub use state::{PidMemory, SolverState};

use crate::certify::{
    check_dual_infeasible_with, check_optimal, check_primal_infeasible_with, default_gamma, residuals_with,
    Certificate, Cones, ResidualReport,
};
use crate::error::{Error, Result};
use crate::inner::{solve_bb, solve_diagonal_into, SubproblemSpec};
use crate::linalg::{dist2, estimate_norm, QuadOperator};
use crate::model::{project_box, QpProblem};
use crate::Scalar;

/// Step size used when `A` has no nonzero entries.
pub const ZERO_MATRIX_ETA: f64 = 1e8;

const OMEGA_MIN: f64 = 1e-6;
const OMEGA_MAX: f64 = 1e6;
const INTEGRAL_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PdhgOutput<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub inner_iters: usize,
}

#[derive(Debug, Clone)]
struct Workspace<T> {
    linear: Vec<T>,
    x_bar: Vec<T>,
    a_x_bar: Vec<T>,
    x_next: Vec<T>,
    y_next: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    fn new(n: usize, m: usize) -> Self {
        Workspace {
            linear: vec![T::zero(); n],
            x_bar: vec![T::zero(); n],
            a_x_bar: vec![T::zero(); m],
            x_next: vec![T::zero(); n],
            y_next: vec![T::zero(); m],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn pdhg_into<T: Scalar>(
    p: &QpProblem<T>,
    x: &[T],
    y: &[T],
    tau: T,
    sigma: T,
    inner_tol: T,
    max_inner: usize,
    curvature: Option<T>,
    work: &mut Workspace<T>,
    x_out: &mut [T],
    y_out: &mut [T],
) -> usize {
    let a = &p.constraint_matrix;
    a.matvec_t_into(y, &mut work.linear);
    for (l, &c) in work.linear.iter_mut().zip(&p.cost) {
        *l += c;
    }
    let spec = SubproblemSpec {
        quad: &p.quad,
        linear: &work.linear,
        prox_center: x,
        tau,
        bounds: &p.var_bounds,
        curvature_hint: curvature,
    };
    let inner_iters = if let QuadOperator::Diagonal(_) = p.quad {
        solve_diagonal_into(&spec, x_out);
        1
    } else {
        let sol = solve_bb(&spec, inner_tol, max_inner);
        x_out.copy_from_slice(&sol.x);
        sol.iters
    };

    let two = T::lit(2.0);
    for i in 0..x.len() {
        work.x_bar[i] = two * x_out[i] - x[i];
    }
    a.matvec_into(&work.x_bar, &mut work.a_x_bar);
    let (lc, uc) = (p.con_bounds.lower(), p.con_bounds.upper());
    for i in 0..y.len() {
        // y + σv − σ·proj_S(y/σ + v), written so that it vanishes exactly
        // when y/σ + v lies inside the box
        let w = y[i] / sigma + work.a_x_bar[i];
        y_out[i] = sigma * (w - w.max(lc[i]).min(uc[i]));
    }
    inner_iters
}

/// One PDHG step from `(x, y)` with primal step `tau` and dual step `sigma`.
///
/// The primal subproblem is solved in closed form for diagonal `Q` and by
/// BB projected gradient to `inner_tol` otherwise.
pub fn pdhg_step<T: Scalar>(
    p: &QpProblem<T>,
    x: &[T],
    y: &[T],
    tau: T,
    sigma: T,
    inner_tol: T,
    max_inner: usize,
) -> Result<PdhgOutput<T>> {
    let (n, m) = (p.num_vars(), p.num_rows());
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            context: "pdhg_step primal",
            expected: n,
            found: x.len(),
        });
    }
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "pdhg_step dual",
            expected: m,
            found: y.len(),
        });
    }
    let mut work = Workspace::new(n, m);
    let mut xo = vec![T::zero(); n];
    let mut yo = vec![T::zero(); m];
    let inner_iters = pdhg_into(p, x, y, tau, sigma, inner_tol, max_inner, None, &mut work, &mut xo, &mut yo);
    Ok(PdhgOutput {
        x: xo,
        y: yo,
        inner_iters,
    })
}

/// Weights of one Halpern combination
/// `z⁺ = pdhg·T(z^k) + anchor·z⁰ + current·z^k + previous·z^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalpernWeights<T> {
    pub pdhg: T,
    pub anchor: T,
    pub current: T,
    pub previous: T,
}

impl<T: Scalar> HalpernWeights<T> {
    pub fn sum(&self) -> T {
        self.pdhg + self.anchor + self.current + self.previous
    }
}

/// Combination weights at in-round index `k`. With `anchored = false` the
/// anchor weight is zero and the update is a plain reflected PDHG step.
pub fn halpern_coefficients<T: Scalar>(k: usize, theta: T, form: Reflection, anchored: bool) -> HalpernWeights<T> {
    let one = T::one();
    let (keep, pull) = if anchored {
        let d = T::from_usize_lossy(k + 2);
        (T::from_usize_lossy(k + 1) / d, one / d)
    } else {
        (one, T::zero())
    };
    match form {
        Reflection::Current => HalpernWeights {
            pdhg: keep * (one + theta),
            anchor: pull,
            current: -keep * theta,
            previous: T::zero(),
        },
        Reflection::Previous => HalpernWeights {
            pdhg: (one + theta) * keep,
            anchor: (one + theta) * pull,
            current: T::zero(),
            previous: -theta,
        },
    }
}

/// Applies [`HalpernWeights`] componentwise.
pub fn halpern_combine<T: Scalar>(
    w: &HalpernWeights<T>,
    pdhg_out: &[T],
    anchor: &[T],
    current: &[T],
    previous: &[T],
) -> Vec<T> {
    let mut out = vec![T::zero(); pdhg_out.len()];
    combine_into(w, pdhg_out, anchor, current, previous, &mut out);
    out
}

fn combine_into<T: Scalar>(w: &HalpernWeights<T>, t: &[T], a: &[T], c: &[T], p: &[T], out: &mut [T]) {
    for i in 0..out.len() {
        out[i] = w.pdhg * t[i] + w.anchor * a[i] + w.current * c[i] + w.previous * p[i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartDecision {
    Continue,
    Restart,
}

pub fn restart_decision<T: Scalar>(
    kkt: T,
    round_start_kkt: T,
    last_check_kkt: Option<T>,
    k: usize,
    params: &RestartParams<T>,
) -> RestartDecision {
    let increased = last_check_kkt.is_some_and(|last| kkt > last);
    let restart = kkt <= params.beta_sufficient * round_start_kkt
        || k >= params.max_round_len
        || (kkt <= params.beta_necessary * round_start_kkt && increased);
    if restart {
        RestartDecision::Restart
    } else {
        RestartDecision::Continue
    }
}

/// New weight after a round with primal movement `dx_norm` and dual movement
/// `dy_norm`. Leaves `omega` and the memory untouched when either movement is
/// zero. The change of `ln ω` is clipped to `±gains.max_step`.
pub fn pid_update<T: Scalar>(omega: T, dx_norm: T, dy_norm: T, gains: &PidGains<T>, mem: &mut PidMemory<T>) -> T {
    let ok = |v: T| v > T::zero() && v.is_finite();
    if !ok(dx_norm) || !ok(dy_norm) {
        return omega;
    }
    let e = (omega * dx_norm / dy_norm).ln();
    let clamp = T::lit(INTEGRAL_CLAMP);
    mem.integral = (mem.integral + e).max(-clamp).min(clamp);
    let adjust = (gains.kp * e + gains.ki * mem.integral + gains.kd * (e - mem.last_error))
        .max(-gains.max_step)
        .min(gains.max_step);
    mem.last_error = e;
    (omega.ln() - adjust).exp().max(T::lit(OMEGA_MIN)).min(T::lit(OMEGA_MAX))
}

/// Step size `η = eta_scale / (norm_inflation·‖A‖)`.
pub fn step_size<T: Scalar>(p: &QpProblem<T>, params: &SolverParams<T>) -> T {
    match estimate_norm(&p.constraint_matrix, params.norm_iters, params.norm_seed) {
        Ok(norm) if norm > T::zero() => params.eta_scale / (params.norm_inflation * norm),
        _ => T::lit(ZERO_MATRIX_ETA),
    }
}

/// Starting state: `x⁰ = proj_X(0)`, `y⁰ = 0`, anchored at the start.
pub fn initialize<T: Scalar>(p: &QpProblem<T>, params: &SolverParams<T>) -> SolverState<T> {
    let (n, m) = (p.num_vars(), p.num_rows());
    let x0 = project_box(&vec![T::zero(); n], &p.var_bounds);
    let y0 = vec![T::zero(); m];
    let kkt0 = residuals_with(p, &Cones::new(p), &x0, &y0).max();
    SolverState {
        x: x0.clone(),
        y: y0.clone(),
        x_prev_outer: x0.clone(),
        y_prev_outer: y0.clone(),
        x_out: x0.clone(),
        y_out: y0.clone(),
        anchor_x: x0,
        anchor_y: y0,
        k: 0,
        round: 0,
        omega: params.omega0,
        eta: step_size(p, params),
        pid: PidMemory {
            integral: T::zero(),
            last_error: T::zero(),
        },
        inner_tol: params.inner_tol,
        best_residual_round_start: kkt0,
        last_check_kkt: None,
        outer_iterations: 0,
        inner_iterations: 0,
    }
}

/// Stepwise driver. [`solve`] wraps it; tests use it to inspect single
/// iterations.
pub struct Solver<'a, T: Scalar> {
    problem: &'a QpProblem<T>,
    params: SolverParams<T>,
    cones: Cones,
    curvature: T,
    gamma_sys: T,
    state: SolverState<T>,
    work: Workspace<T>,
    window_x: Vec<T>,
    window_y: Vec<T>,
}

enum Outcome<T> {
    Optimal(ResidualReport<T>),
    Infeasible(Status, ResidualReport<T>, Certificate<T>),
}

impl<'a, T: Scalar> Solver<'a, T> {
    pub fn new(problem: &'a QpProblem<T>, params: SolverParams<T>) -> Result<Self> {
        problem.validate().map_err(|e| Error::InvalidProblem(Box::new(e)))?;
        params.validate()?;
        let state = initialize(problem, &params);
        let curvature = problem.quad.diagonal().into_iter().fold(T::zero(), T::max);
        let gamma_sys = params.gamma_sys.unwrap_or_else(|| default_gamma(&problem.quad));
        Ok(Solver {
            problem,
            cones: Cones::new(problem),
            curvature,
            gamma_sys,
            work: Workspace::new(problem.num_vars(), problem.num_rows()),
            window_x: state.x.clone(),
            window_y: state.y.clone(),
            state,
            params,
        })
    }

    pub fn state(&self) -> &SolverState<T> {
        &self.state
    }

    pub fn params(&self) -> &SolverParams<T> {
        &self.params
    }

    /// One outer iteration: PDHG step, Halpern combination and inner
    /// tolerance update. Returns the inner iterations spent.
    pub fn step(&mut self) -> usize {
        let st = &mut self.state;
        let (tau, sigma) = (st.tau(), st.sigma());
        let iters = pdhg_into(
            self.problem,
            &st.x,
            &st.y,
            tau,
            sigma,
            st.inner_tol.current,
            self.params.max_inner,
            Some(self.curvature),
            &mut self.work,
            &mut st.x_out,
            &mut st.y_out,
        );
        let primal_move = dist2(&st.x_out, &st.x);

        let w = halpern_coefficients(st.k, self.params.theta, self.params.reflection, self.params.halpern);
        combine_into(&w, &st.x_out, &st.anchor_x, &st.x, &st.x_prev_outer, &mut self.work.x_next);
        combine_into(&w, &st.y_out, &st.anchor_y, &st.y, &st.y_prev_outer, &mut self.work.y_next);
        std::mem::swap(&mut st.x_prev_outer, &mut st.x);
        std::mem::swap(&mut st.x, &mut self.work.x_next);
        std::mem::swap(&mut st.y_prev_outer, &mut st.y);
        std::mem::swap(&mut st.y, &mut self.work.y_next);

        st.inner_tol = st.inner_tol.update(st.omega, tau, primal_move);
        st.k += 1;
        st.outer_iterations += 1;
        st.inner_iterations += iters;
        iters
    }

    pub fn report(&self) -> ResidualReport<T> {
        residuals_with(self.problem, &self.cones, &self.state.x_out, &self.state.y_out)
    }

    fn certify(&mut self, progress: &mut dyn FnMut(Progress<'_, T>)) -> Option<Outcome<T>> {
        let report = self.report();
        progress(Progress {
            iteration: self.state.outer_iterations,
            report: &report,
            omega: self.state.omega,
            round: self.state.round,
        });
        if check_optimal(&report, self.params.eps_tol) {
            return Some(Outcome::Optimal(report));
        }

        let st = &self.state;
        for reference in [&self.window_y, &st.anchor_y] {
            let dy: Vec<T> = st.y_out.iter().zip(reference).map(|(&a, &b)| a - b).collect();
            if let Some(cert) = check_primal_infeasible_with(self.problem, &self.cones, &dy, self.params.eps_inf) {
                return Some(Outcome::Infeasible(Status::PrimalInfeasible, report, cert));
            }
        }
        for reference in [&self.window_x, &st.anchor_x] {
            let dx: Vec<T> = st.x_out.iter().zip(reference).map(|(&a, &b)| a - b).collect();
            if let Some(cert) = check_dual_infeasible_with(
                self.problem,
                &self.cones,
                &dx,
                self.params.eps_tol,
                self.params.eps_inf,
                self.gamma_sys,
            ) {
                return Some(Outcome::Infeasible(Status::DualInfeasible, report, cert));
            }
        }
        self.window_x.copy_from_slice(&st.x_out);
        self.window_y.copy_from_slice(&st.y_out);

        let kkt = report.max();
        if let Some(rp) = &self.params.restart {
            let st = &mut self.state;
            match restart_decision(kkt, st.best_residual_round_start, st.last_check_kkt, st.k, rp) {
                RestartDecision::Restart => {
                    // A round that ended no better than it started says
                    // nothing about the primal-dual balance.
                    if kkt < st.best_residual_round_start {
                        let dx = dist2(&st.x_out, &st.anchor_x);
                        let dy = dist2(&st.y_out, &st.anchor_y);
                        st.omega = pid_update(st.omega, dx, dy, &self.params.pid, &mut st.pid);
                    }
                    for v in [&mut st.anchor_x, &mut st.x, &mut st.x_prev_outer] {
                        v.copy_from_slice(&st.x_out);
                    }
                    for v in [&mut st.anchor_y, &mut st.y, &mut st.y_prev_outer] {
                        v.copy_from_slice(&st.y_out);
                    }
                    st.k = 0;
                    st.round += 1;
                    st.best_residual_round_start = kkt;
                    st.last_check_kkt = None;
                }
                RestartDecision::Continue => st.last_check_kkt = Some(kkt),
            }
        }
        None
    }

    fn finish(
        &self,
        status: Status,
        report: ResidualReport<T>,
        certificate: Option<Certificate<T>>,
        start: Instant,
    ) -> SolveResult<T> {
        SolveResult {
            status,
            x: self.state.x_out.clone(),
            y: self.state.y_out.clone(),
            report,
            certificate,
            outer_iterations: self.state.outer_iterations,
            inner_iterations: self.state.inner_iterations,
            restarts: self.state.round,
            omega: self.state.omega,
            seconds: start.elapsed().as_secs_f64(),
        }
    }

    /// Runs to termination, calling `progress` at every certification point.
    pub fn run(mut self, mut progress: impl FnMut(Progress<'_, T>)) -> SolveResult<T> {
        let start = Instant::now();
        loop {
            if let Some(result) = self.advance(start, &mut progress) {
                return result;
            }
        }
    }

    /// One outer iteration of [`run`](Self::run): limit checks, the step,
    /// and certification plus the restart test when due. Returns the final
    /// result once the solve ends; `start` is when the solve began.
    pub fn advance(&mut self, start: Instant, progress: &mut dyn FnMut(Progress<'_, T>)) -> Option<SolveResult<T>> {
        let limit = if self.state.outer_iterations >= self.params.iter_limit {
            Some(Status::IterationLimit)
        } else if self.params.time_limit.is_some_and(|t| start.elapsed() >= t) {
            Some(Status::TimeLimit)
        } else {
            None
        };
        if let Some(status) = limit {
            let report = self.report();
            let status = if check_optimal(&report, self.params.eps_tol) {
                Status::Optimal
            } else {
                status
            };
            return Some(self.finish(status, report, None, start));
        }

        self.step();
        let round_cap = self.params.restart.map(|r| r.max_round_len);
        let due = self.state.outer_iterations % self.params.check_every == 0
            || round_cap.is_some_and(|cap| self.state.k >= cap);
        if !due {
            return None;
        }
        match self.certify(progress)? {
            Outcome::Optimal(report) => Some(self.finish(Status::Optimal, report, None, start)),
            Outcome::Infeasible(status, report, cert) => Some(self.finish(status, report, Some(cert), start)),
        }
    }
}

/// Solves `problem` with `params`.
pub fn solve<T: Scalar>(problem: &QpProblem<T>, params: &SolverParams<T>) -> Result<SolveResult<T>> {
    Ok(Solver::new(problem, params.clone())?.run(|_| {}))
}

/// [`solve`] with a callback at every certification point.
pub fn solve_with_progress<T: Scalar>(
    problem: &QpProblem<T>,
    params: &SolverParams<T>,
    progress: impl FnMut(Progress<'_, T>),
) -> Result<SolveResult<T>> {
    Ok(Solver::new(problem, params.clone())?.run(progress))
}
