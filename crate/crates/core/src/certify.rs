//! Optimality residuals, the termination test and infeasibility certificates.
//!
//! All residuals are L∞ based and normalized by the problem data, so a single
//! tolerance applies to all three.

use crate::linalg::{dot, norm_inf, QuadOperator};
use crate::model::{cone_of, Bounds, cone_violation, support_p, ConeKind, ConeSide, QpProblem};
use crate::Scalar;

/// Sign cones of a problem, computed once per solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Cones {
    /// Multiplier sign set `Y` (per constraint row).
    pub dual_y: Vec<ConeKind>,
    /// Reduced-cost sign set `R` (per variable).
    pub dual_r: Vec<ConeKind>,
    /// Recession cone of the variable box.
    pub recession_x: Vec<ConeKind>,
    /// Recession cone of the constraint box.
    pub recession_s: Vec<ConeKind>,
}

impl Cones {
    pub fn new<T: Scalar>(p: &QpProblem<T>) -> Self {
        Cones {
            dual_y: cone_of(&p.con_bounds, ConeSide::DualY),
            dual_r: cone_of(&p.var_bounds, ConeSide::DualR),
            recession_x: cone_of(&p.var_bounds, ConeSide::Recession),
            recession_s: cone_of(&p.con_bounds, ConeSide::Recession),
        }
    }
}

/// Normalized KKT residuals at one primal–dual point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport<T> {
    pub r_primal: T,
    pub r_dual: T,
    pub r_gap: T,
    /// `½xᵀQx + cᵀx`
    pub primal_obj: T,
    /// `−p(−r; l_v, u_v) − ½xᵀQx − p(y; l_c, u_c)` with `r`, `y` projected
    /// onto their sign cones.
    pub dual_obj: T,
    /// `r = Qx + c + Aᵀy`
    pub dual_slack: Vec<T>,
}

impl<T: Scalar> ResidualReport<T> {
    /// `max(r_primal, r_dual, r_gap)`
    pub fn max(&self) -> T {
        self.r_primal.max(self.r_dual).max(self.r_gap)
    }
}

pub fn residuals<T: Scalar>(p: &QpProblem<T>, x: &[T], y: &[T]) -> ResidualReport<T> {
    residuals_with(p, &Cones::new(p), x, y)
}

/// Same as [`residuals`] with precomputed cones.
pub fn residuals_with<T: Scalar>(p: &QpProblem<T>, cones: &Cones, x: &[T], y: &[T]) -> ResidualReport<T> {
    let a = &p.constraint_matrix;
    let one = T::one();
    let half = T::lit(0.5);

    let mut ax = vec![T::zero(); a.rows()];
    a.matvec_into(x, &mut ax);
    let (lc, uc) = (p.con_bounds.lower(), p.con_bounds.upper());
    let primal_violation = ax
        .iter()
        .enumerate()
        .fold(T::zero(), |m, (i, &v)| m.max((v - v.max(lc[i]).min(uc[i])).abs()));
    let r_primal = primal_violation / (one + p.con_bounds.finite_norm_inf());

    let mut qx = vec![T::zero(); x.len()];
    p.quad.apply_into(x, &mut qx);
    let mut aty = vec![T::zero(); x.len()];
    a.matvec_t_into(y, &mut aty);
    let r: Vec<T> = (0..x.len()).map(|i| qx[i] + p.cost[i] + aty[i]).collect();
    let dual_violation = cone_violation(&r, &cones.dual_r);
    let dual_scale = norm_inf(&qx).max(norm_inf(&aty)).max(norm_inf(&p.cost));
    let r_dual = dual_violation / (one + dual_scale);

    let neg_r_proj: Vec<T> = r
        .iter()
        .zip(&cones.dual_r)
        .map(|(&v, k)| -k.project(v))
        .collect();
    let y_proj: Vec<T> = y.iter().zip(&cones.dual_y).map(|(&v, k)| k.project(v)).collect();
    let p_r = support_p(&neg_r_proj, &p.var_bounds);
    let p_y = support_p(&y_proj, &p.con_bounds);

    let xqx = dot(x, &qx);
    let cx = dot(&p.cost, x);
    let primal_obj = half * xqx + cx;
    let dual_obj = -p_r - half * xqx - p_y;
    let gap = (xqx + cx + p_r + p_y).abs();
    let r_gap = gap / (one + primal_obj.abs().max((half * xqx + p_r + p_y).abs()));

    ResidualReport {
        r_primal,
        r_dual,
        r_gap,
        primal_obj,
        dual_obj,
        dual_slack: r,
    }
}

/// `max(r_primal, r_dual, r_gap) ≤ eps_tol`
pub fn check_optimal<T: Scalar>(report: &ResidualReport<T>, eps_tol: T) -> bool {
    report.max() <= eps_tol
}

#[derive(Debug, Clone, PartialEq)]
pub enum CertificateKind<T> {
    /// Farkas ray `ỹ ∈ Y` proving the constraints cannot be met.
    PrimalRay(Vec<T>),
    /// Recession direction `d̃` with `‖d̃‖∞ = 1` along which the objective
    /// decreases without bound.
    DualRay(Vec<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T> {
    pub kind: CertificateKind<T>,
    /// Constraint violation of the ray measured by the firing test.
    pub violation: T,
    /// `B⁻` for a primal ray, `−cᵀd̃` for a dual ray.
    pub improvement: T,
}

impl<T> Certificate<T> {
    pub fn ray(&self) -> &[T] {
        match &self.kind {
            CertificateKind::PrimalRay(v) | CertificateKind::DualRay(v) => v,
        }
    }
}

pub fn check_primal_infeasible<T: Scalar>(p: &QpProblem<T>, delta_y: &[T], eps_inf: T) -> Option<Certificate<T>> {
    check_primal_infeasible_with(p, &Cones::new(p), delta_y, eps_inf)
}

/// Primal infeasibility test on a candidate ray `Δy`.
///
/// With `ỹ = proj_Y(Δy)` and `B = p(−Aᵀỹ; l_v, u_v) + p(ỹ; l_c, u_c)`, fires
/// when `B⁻ = max(−B, 0) > 0` and `‖Aᵀỹ − proj_R(Aᵀỹ)‖∞ ≤ eps_inf·B⁻`. The
/// support term on `Aᵀỹ` is taken at its projection onto `R` so that a
/// tiny cone violation does not turn it into `+∞`; the violation term
/// accounts for that distance.
pub fn check_primal_infeasible_with<T: Scalar>(
    p: &QpProblem<T>,
    cones: &Cones,
    delta_y: &[T],
    eps_inf: T,
) -> Option<Certificate<T>> {
    let ray: Vec<T> = delta_y
        .iter()
        .zip(&cones.dual_y)
        .map(|(&v, k)| k.project(v))
        .collect();
    let aty = p.constraint_matrix.matvec_t(&ray).ok()?;
    let violation = cone_violation(&aty, &cones.dual_r);
    let neg_aty_proj: Vec<T> = aty
        .iter()
        .zip(&cones.dual_r)
        .map(|(&v, k)| -k.project(v))
        .collect();
    let b = support_p(&neg_aty_proj, &p.var_bounds) + support_p(&ray, &p.con_bounds);
    let b_minus = (-b).max(T::zero());
    if !(b_minus > T::zero() && b_minus.is_finite()) {
        return None;
    }
    // A margin at rounding level of its own summands proves nothing.
    let magnitude =
        support_magnitude(&neg_aty_proj, &p.var_bounds) + support_magnitude(&ray, &p.con_bounds);
    if b_minus <= T::from(ROUNDING_FACTOR).unwrap() * T::epsilon() * magnitude {
        return None;
    }
    (violation <= eps_inf * b_minus).then_some(Certificate {
        kind: CertificateKind::PrimalRay(ray),
        violation,
        improvement: b_minus,
    })
}

const ROUNDING_FACTOR: f64 = 1e3;

/// Sum of the absolute terms of `support_p(z; b)`, assuming it is finite.
fn support_magnitude<T: Scalar>(z: &[T], b: &Bounds<T>) -> T {
    z.iter()
        .zip(b.lower().iter().zip(b.upper()))
        .map(|(&zi, (&l, &u))| {
            if zi > T::zero() {
                (u * zi).abs()
            } else if zi < T::zero() {
                (l * zi).abs()
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), |a, v| a + v)
}

/// Default curvature scale for the dual infeasibility test:
/// `1 + ‖Q‖∞` (row-sum bound).
pub fn default_gamma<T: Scalar>(quad: &QuadOperator<T>) -> T {
    T::one() + quad.norm_inf_bound()
}

pub fn check_dual_infeasible<T: Scalar>(
    p: &QpProblem<T>,
    delta_x: &[T],
    eps_tol: T,
    eps_inf: T,
    gamma_sys: T,
) -> Option<Certificate<T>> {
    check_dual_infeasible_with(p, &Cones::new(p), delta_x, eps_tol, eps_inf, gamma_sys)
}

/// Dual infeasibility (unboundedness) test on a candidate direction `Δx`.
///
/// Normalizes `d̃ = Δx / ‖Δx‖∞` and fires when `cᵀd̃ < −eps_tol` and the
/// largest of the recession-cone violations of `d̃` and `Ad̃` and of
/// `‖Qd̃‖∞ / γ` is at most `eps_inf`.
pub fn check_dual_infeasible_with<T: Scalar>(
    p: &QpProblem<T>,
    cones: &Cones,
    delta_x: &[T],
    eps_tol: T,
    eps_inf: T,
    gamma_sys: T,
) -> Option<Certificate<T>> {
    let scale = norm_inf(delta_x);
    if scale.is_zero() || !scale.is_finite() {
        return None;
    }
    let d: Vec<T> = delta_x.iter().map(|&v| v / scale).collect();
    let cd = dot(&p.cost, &d);
    if !(cd < -eps_tol) {
        return None;
    }
    let ad = p.constraint_matrix.matvec(&d).ok()?;
    let qd = p.quad.apply(&d).ok()?;
    let violation = cone_violation(&d, &cones.recession_x)
        .max(cone_violation(&ad, &cones.recession_s))
        .max(norm_inf(&qd) / gamma_sys);
    (violation <= eps_inf).then_some(Certificate {
        kind: CertificateKind::DualRay(d),
        violation,
        improvement: -cd,
    })
}
