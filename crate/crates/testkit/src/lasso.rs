//! Proximal gradient reference for `‖Ax − b‖₂² + λ‖x‖₁`.

use nalgebra::{DMatrix, DVector};

/// Lasso objective `‖Ax − b‖₂² + λ‖x‖₁`.
pub fn lasso_objective(a: &DMatrix<f64>, b: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let r = a * DVector::from_column_slice(x) - DVector::from_column_slice(b);
    r.norm_squared() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

fn spectral_norm_sq(a: &DMatrix<f64>) -> f64 {
    let ata = a.tr_mul(a);
    let mut v = DVector::from_fn(a.ncols(), |i, _| 1.0 + (i % 3) as f64);
    let mut est = 0.0;
    for _ in 0..500 {
        let w = &ata * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = w / nw;
        let prev = est;
        est = nw / v.norm();
        v = next;
        if (est - prev).abs() <= 1e-14 * est {
            break;
        }
    }
    est
}

/// ISTA with step `1/(2‖A‖²)` and soft thresholding, stopped once
/// `‖x⁺ − x‖∞ ≤ tol` or after `iters` steps. Starts from zero.
pub fn ista_lasso(a: &DMatrix<f64>, b: &[f64], lambda: f64, iters: usize, tol: f64) -> Vec<f64> {
    let n = a.ncols();
    let lip = 2.0 * spectral_norm_sq(a) * (1.0 + 1e-9);
    if lip == 0.0 {
        return vec![0.0; n];
    }
    let step = 1.0 / lip;
    let thresh = step * lambda;
    let bv = DVector::from_column_slice(b);
    let mut x = DVector::zeros(n);
    for _ in 0..iters {
        let grad = 2.0 * a.tr_mul(&(a * &x - &bv));
        let z = &x - step * grad;
        let next = z.map(|v: f64| v.signum() * (v.abs() - thresh).max(0.0));
        let change = (&next - &x).amax();
        x = next;
        if change <= tol {
            break;
        }
    }
    x.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ista_lasso(&a, &[0.0, 0.0], 1.0, 100, 1e-12), vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_threshold() {
        let a = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(ista_lasso(&a, &[1.0], 4.0, 1000, 1e-14), vec![0.0]);
        let x = ista_lasso(&a, &[1.0], 1.0, 1000, 1e-14);
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn objective_identity() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert_eq!(lasso_objective(&a, &[1.0], 2.0, &[1.0, -1.0]), 1.0 + 4.0);
    }
}
