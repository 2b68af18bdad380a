use crate::inner::InnerTolerance;
use crate::Scalar;

/// Controller memory across rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidMemory<T> {
    pub integral: T,
    pub last_error: T,
}

/// Everything the outer loop carries between iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    /// Halpern iterate `z^k`, the input of the next PDHG step.
    pub x: Vec<T>,
    pub y: Vec<T>,
    /// `z^{k−1}`, used by [`Reflection::Previous`](super::Reflection::Previous).
    pub x_prev_outer: Vec<T>,
    pub y_prev_outer: Vec<T>,
    /// Last PDHG output `T(z^{k−1})`; this is the point that gets
    /// certified and returned.
    pub x_out: Vec<T>,
    pub y_out: Vec<T>,
    /// Anchor `z⁰` of the current round; equal to the round start.
    pub anchor_x: Vec<T>,
    pub anchor_y: Vec<T>,
    /// Iteration index within the round.
    pub k: usize,
    pub round: usize,
    pub omega: T,
    pub eta: T,
    pub pid: PidMemory<T>,
    pub inner_tol: InnerTolerance<T>,
    pub best_residual_round_start: T,
    pub last_check_kkt: Option<T>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl<T: Scalar> SolverState<T> {
    /// Primal step `τ = η/ω`.
    pub fn tau(&self) -> T {
        self.eta / self.omega
    }

    /// Dual step `σ = η·ω`.
    pub fn sigma(&self) -> T {
        self.eta * self.omega
    }
}
