//! Dense reference oracles for checking the `halqp` solver on small
//! instances: a QP oracle, an ISTA Lasso solver and independent certificate
//! checks.

mod certcheck;
mod ipm;
mod lasso;
mod oracle;

pub use certcheck::{check_farkas_ray, check_recession_ray, march_objective, RayCheck};
pub use lasso::{ista_lasso, lasso_objective};
pub use oracle::{active_set_solve, ActiveBound, OracleSolution, OracleStatus, MAX_ROWS, MAX_VARS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large for the oracle: {vars} variables, {rows} rows")]
    TooLarge { vars: usize, rows: usize },
    #[error("invalid instance: {0}")]
    Invalid(halqp::Error),
    #[error("interior point method did not converge")]
    NoConvergence,
}
