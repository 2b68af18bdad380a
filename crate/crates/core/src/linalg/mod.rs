//! Sparse kernels, the structured quadratic operator and norm estimation.

mod norm;
mod quad;
mod sparse;
mod vector;

pub use norm::{estimate_norm, DEFAULT_NORM_ITERS};
pub use quad::QuadOperator;
pub use sparse::{CsrMatrix, SymmetricMatrix};
pub use vector::{axpy, dist2, dot, norm2, norm_inf, scale, sub};
