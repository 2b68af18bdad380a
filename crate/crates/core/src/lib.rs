//! Restarted Halpern PDHG for convex quadratic programs
//!
//! ```text
//! minimize    ½xᵀQx + cᵀx
//! subject to  l_c ≤ Ax ≤ u_c,  l_v ≤ x ≤ u_v
//! ```
//!
//! Each outer iteration takes one primal–dual hybrid gradient step, whose
//! primal subproblem is solved in closed form (diagonal `Q`) or by
//! Barzilai–Borwein projected gradient to an adaptive tolerance. Iterates are
//! anchored toward the start of the current restart round with a reflected
//! Halpern combination, and the primal–dual weight `ω` is tuned between rounds
//! by a PID controller. Termination uses normalized L∞ KKT residuals;
//! infeasible and unbounded instances are reported with ray certificates.
//!
//! ```
//! use halqp::{solve, Bounds, CsrMatrix, Params, Problem, QuadOperator, Status};
//!
//! // min ½x² − x  s.t.  0 ≤ x ≤ 10
//! let p = Problem::new(
//!     QuadOperator::Diagonal(vec![1.0]),
//!     vec![-1.0],
//!     CsrMatrix::zeros(0, 1),
//!     Bounds::new(vec![0.0], vec![10.0]).unwrap(),
//!     Bounds::free(0),
//! )
//! .unwrap();
//! let res = solve(&p, &Params::default()).unwrap();
//! assert_eq!(res.status, Status::Optimal);
//! assert!((res.x[0] - 1.0).abs() < 1e-5);
//! ```

pub mod certify;
pub mod engine;
mod error;
pub mod inner;
pub mod linalg;
pub mod model;
mod scalar;

pub use certify::{Certificate, CertificateKind, ResidualReport};
pub use engine::{solve, solve_with_progress, Progress, SolveResult, Solver, SolverParams, Status};
pub use error::{BoundSet, Error, Result};
pub use inner::InnerTolerance;
pub use linalg::{CsrMatrix, QuadOperator, SymmetricMatrix};
pub use model::{Bounds, QpProblem};
pub use scalar::Scalar;

pub type Problem = QpProblem<f64>;
pub type Params = SolverParams<f64>;
pub type Solution = SolveResult<f64>;
pub type Report = ResidualReport<f64>;

pub type Problem32 = QpProblem<f32>;
pub type Params32 = SolverParams<f32>;
pub type Solution32 = SolveResult<f32>;
