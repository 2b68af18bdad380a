//! Independent re-validation of infeasibility certificates with dense
//! arithmetic. Deliberately shares no code with the solver's own tests.

use halqp::QpProblem;

/// Outcome of re-checking a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCheck {
    /// Largest constraint violation of the ray.
    pub violation: f64,
    /// Separation margin: `inf_{x∈X} vᵀx − sup_{s∈S} yᵀs` for a Farkas ray,
    /// `−cᵀd` for a recession ray.
    pub margin: f64,
}

impl RayCheck {
    /// Relative test for Farkas rays: `margin > 0` and
    /// `violation ≤ tol·margin`.
    pub fn farkas_ok(&self, tol: f64) -> bool {
        self.margin > 0.0 && self.violation <= tol * self.margin
    }

    /// Absolute test for recession rays.
    pub fn recession_ok(&self, tol: f64) -> bool {
        self.margin > 0.0 && self.violation <= tol
    }
}

fn dense_mul(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Checks `y` as a proof that `{x ∈ X : Ax ∈ S}` is empty.
///
/// With `v = Aᵀy`, the coefficients that meet an infinite bound in
/// `inf_{x∈X} vᵀx` or `sup_{s∈S} yᵀs` count as violation; the remaining
/// finite parts give the margin.
pub fn check_farkas_ray(p: &QpProblem<f64>, y: &[f64]) -> RayCheck {
    let a = p.constraint_matrix.to_dense();
    let n = p.num_vars();
    let mut v = vec![0.0; n];
    for (row, &yi) in a.iter().zip(y) {
        for j in 0..n {
            v[j] += row[j] * yi;
        }
    }
    let mut violation: f64 = 0.0;
    let mut inf_x = 0.0;
    for j in 0..n {
        let (l, u) = (p.var_bounds.lower()[j], p.var_bounds.upper()[j]);
        if v[j] > 0.0 {
            if l.is_finite() {
                inf_x += v[j] * l;
            } else {
                violation = violation.max(v[j]);
            }
        } else if v[j] < 0.0 {
            if u.is_finite() {
                inf_x += v[j] * u;
            } else {
                violation = violation.max(-v[j]);
            }
        }
    }
    let mut sup_s = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let (l, u) = (p.con_bounds.lower()[i], p.con_bounds.upper()[i]);
        if yi > 0.0 {
            if u.is_finite() {
                sup_s += yi * u;
            } else {
                violation = f64::INFINITY;
            }
        } else if yi < 0.0 {
            if l.is_finite() {
                sup_s += yi * l;
            } else {
                violation = f64::INFINITY;
            }
        }
    }
    RayCheck {
        violation,
        margin: inf_x - sup_s,
    }
}

/// Checks `d` (normalized to `‖d‖∞ = 1` here) as a direction of unbounded
/// descent: recession of both boxes, `‖Qd‖∞ ≤ gamma·tol`, and `cᵀd < 0`.
///
/// `gamma` is the curvature scale the ray was certified against; pass
/// `None` for `1 + ‖Q‖∞` computed from the dense matrix.
pub fn check_recession_ray(p: &QpProblem<f64>, d: &[f64], gamma: Option<f64>) -> RayCheck {
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return RayCheck {
            violation: f64::INFINITY,
            margin: 0.0,
        };
    }
    let d: Vec<f64> = d.iter().map(|v| v / scale).collect();
    let box_violation = |z: &[f64], lo: &[f64], hi: &[f64]| {
        z.iter().enumerate().fold(0.0f64, |m, (i, &v)| {
            let below = if lo[i].is_finite() { (-v).max(0.0) } else { 0.0 };
            let above = if hi[i].is_finite() { v.max(0.0) } else { 0.0 };
            m.max(below).max(above)
        })
    };
    let q = p.quad.to_dense();
    let gamma = gamma.unwrap_or_else(|| {
        1.0 + q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    });
    let qd = dense_mul(&q, &d);
    let ad = dense_mul(&p.constraint_matrix.to_dense(), &d);
    let violation = box_violation(&d, p.var_bounds.lower(), p.var_bounds.upper())
        .max(box_violation(&ad, p.con_bounds.lower(), p.con_bounds.upper()))
        .max(qd.iter().fold(0.0f64, |m, v| m.max(v.abs())) / gamma);
    let cd: f64 = p.cost.iter().zip(&d).map(|(a, b)| a * b).sum();
    RayCheck { violation, margin: -cd }
}

/// `f(x₀ + λd)` for each step, with `f(x) = ½xᵀQx + cᵀx`.
pub fn march_objective(p: &QpProblem<f64>, x0: &[f64], d: &[f64], steps: &[f64]) -> Vec<f64> {
    let q = p.quad.to_dense();
    steps
        .iter()
        .map(|&t| {
            let x: Vec<f64> = x0.iter().zip(d).map(|(a, b)| a + t * b).collect();
            let qx = dense_mul(&q, &x);
            0.5 * x.iter().zip(&qx).map(|(a, b)| a * b).sum::<f64>()
                + p.cost.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use halqp::{Bounds, CsrMatrix, QuadOperator};

    #[test]
    fn farkas_example() {
        let p = QpProblem::new(
            QuadOperator::zero(1),
            vec![0.0],
            CsrMatrix::identity(1),
            Bounds::nonneg(1),
            Bounds::new(vec![f64::NEG_INFINITY], vec![-1.0]).unwrap(),
        )
        .unwrap();
        let c = check_farkas_ray(&p, &[1.0]);
        assert_eq!(c, RayCheck { violation: 0.0, margin: 1.0 });
        assert!(c.farkas_ok(1e-12));
        assert!(!check_farkas_ray(&p, &[-1.0]).farkas_ok(1e-3));
    }

    #[test]
    fn recession_example() {
        let p = QpProblem::new(
            QuadOperator::zero(1),
            vec![-1.0],
            CsrMatrix::zeros(0, 1),
            Bounds::nonneg(1),
            Bounds::free(0),
        )
        .unwrap();
        assert!(check_recession_ray(&p, &[2.0], None).recession_ok(1e-12));
        assert!(!check_recession_ray(&p, &[-2.0], None).recession_ok(1e-3));
        let f = march_objective(&p, &[0.0], &[1.0], &[1.0, 10.0, 100.0]);
        assert_eq!(f, vec![-1.0, -10.0, -100.0]);
    }
}
