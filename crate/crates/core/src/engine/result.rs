use std::fmt;

use crate::certify::{Certificate, ResidualReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    TimeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::IterationLimit => "iteration_limit",
            Status::TimeLimit => "time_limit",
        }
    }

    pub fn is_solved(self) -> bool {
        matches!(self, Status::Optimal | Status::PrimalInfeasible | Status::DualInfeasible)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub status: Status,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub report: ResidualReport<T>,
    pub certificate: Option<Certificate<T>>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Number of completed restart rounds.
    pub restarts: usize,
    pub omega: T,
    pub seconds: f64,
}

/// Snapshot passed to the progress callback at each certification point.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a, T> {
    pub iteration: usize,
    pub report: &'a ResidualReport<T>,
    pub omega: T,
    pub round: usize,
}
