use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;
use crate::linalg::vector::norm2;
use crate::Scalar;

/// Iteration count used by the solver when sizing its step.
pub const DEFAULT_NORM_ITERS: usize = 100;

/// Estimates the spectral norm `‖A‖₂` by power iteration on `AᵀA` from a
/// seeded random start.
///
/// The returned value is `‖Av‖₂` for a unit vector `v`, so it never exceeds
/// the true norm. Deterministic for a fixed seed.
pub fn estimate_norm<T: Scalar>(a: &CsrMatrix<T>, iters: usize, seed: u64) -> Result<T> {
    if a.values().iter().all(|v| v.is_zero()) {
        return Err(Error::ZeroMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..a.cols())
        .map(|_| T::lit(rng.random_range(-1.0..1.0)))
        .collect();
    let mut av = vec![T::zero(); a.rows()];
    let mut atav = vec![T::zero(); a.cols()];

    normalize(&mut v);
    for _ in 0..iters.max(1) {
        a.matvec_into(&v, &mut av);
        a.matvec_t_into(&av, &mut atav);
        if norm2(&atav).is_zero() {
            // start vector landed in the null space; nudge it
            for (j, vj) in v.iter_mut().enumerate() {
                *vj += T::lit(((j % 7) as f64 + 1.0) * 1e-3);
            }
            normalize(&mut v);
            continue;
        }
        v.copy_from_slice(&atav);
        normalize(&mut v);
    }
    a.matvec_into(&v, &mut av);
    Ok(norm2(&av))
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = norm2(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
