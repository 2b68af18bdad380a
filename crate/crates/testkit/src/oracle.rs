//! Reference solver for small instances.
//!
//! The problem is lifted to `w = (x, s)` with `Ax − s = 0` and box bounds on
//! both blocks. Status is settled first: a phase-1 least-squares problem
//! decides feasibility and a recession LP decides boundedness. Feasible,
//! bounded instances are solved by an interior point method, after which the
//! active bounds are read off and the equality-constrained KKT system on
//! that active set is solved directly to polish the point.

use halqp::model::{cone_of, ConeKind, ConeSide};
use halqp::{QpProblem, QuadOperator};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ipm::{self, BoxQp, IpmPoint};
use crate::OracleError;

pub const MAX_VARS: usize = 30;
pub const MAX_ROWS: usize = 15;

/// Infeasibility threshold on the phase-1 distance `‖Ax − s‖₁`.
const FEAS_TOL: f64 = 1e-7;
/// Unboundedness threshold on `cᵀd` over the normalized recession set.
const RAY_TOL: f64 = 1e-7;
const POLISH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActiveBound {
    VarLower(usize),
    VarUpper(usize),
    RowLower(usize),
    RowUpper(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub status: OracleStatus,
    /// Primal point; a recession ray when unbounded, empty when infeasible.
    pub x: Vec<f64>,
    /// Row multipliers in the solver's sign convention.
    pub y: Vec<f64>,
    /// `½xᵀQx + cᵀx` (no offset). Infinite for the non-optimal statuses.
    pub objective: f64,
    pub active_set: Vec<ActiveBound>,
    /// Whether the active-set polish was accepted.
    pub polished: bool,
}

struct Dense {
    n: usize,
    m: usize,
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    lv: Vec<f64>,
    uv: Vec<f64>,
    lc: Vec<f64>,
    uc: Vec<f64>,
}

fn densify(p: &QpProblem<f64>) -> Dense {
    let (n, m) = (p.num_vars(), p.num_rows());
    let qd = p.quad.to_dense();
    let ad = p.constraint_matrix.to_dense();
    Dense {
        n,
        m,
        q: DMatrix::from_fn(n, n, |i, j| qd[i][j]),
        c: DVector::from_column_slice(&p.cost),
        a: DMatrix::from_fn(m, n, |i, j| ad[i][j]),
        lv: p.var_bounds.lower().to_vec(),
        uv: p.var_bounds.upper().to_vec(),
        lc: p.con_bounds.lower().to_vec(),
        uc: p.con_bounds.upper().to_vec(),
    }
}

/// `[A −I]`
fn lifted_rows(d: &Dense) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(d.m, d.n + d.m);
    b.view_mut((0, 0), (d.m, d.n)).copy_from(&d.a);
    for i in 0..d.m {
        b[(i, d.n + i)] = -1.0;
    }
    b
}

/// Solves a QP with at most [`MAX_VARS`] variables and [`MAX_ROWS`] rows.
pub fn active_set_solve(p: &QpProblem<f64>) -> Result<OracleSolution, OracleError> {
    let (n, m) = (p.num_vars(), p.num_rows());
    if n > MAX_VARS || m > MAX_ROWS {
        return Err(OracleError::TooLarge { vars: n, rows: m });
    }
    p.validate().map_err(OracleError::Invalid)?;
    let d = densify(p);

    if phase_one_distance(&d)? > FEAS_TOL * (1.0 + data_scale(&d)) {
        return Ok(OracleSolution {
            status: OracleStatus::Infeasible,
            x: Vec::new(),
            y: Vec::new(),
            objective: f64::INFINITY,
            active_set: Vec::new(),
            polished: false,
        });
    }
    if let Some(ray) = recession_ray(p, &d)? {
        return Ok(OracleSolution {
            status: OracleStatus::Unbounded,
            x: ray,
            y: Vec::new(),
            objective: f64::NEG_INFINITY,
            active_set: Vec::new(),
            polished: false,
        });
    }

    let mut h = DMatrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&d.q);
    let mut g = DVector::zeros(n + m);
    g.rows_mut(0, n).copy_from(&d.c);
    let qp = BoxQp {
        h,
        g,
        b: lifted_rows(&d),
        rhs: DVector::zeros(m),
        lo: d.lv.iter().chain(&d.lc).copied().collect(),
        hi: d.uv.iter().chain(&d.uc).copied().collect(),
    };
    let point = ipm::solve(&qp)?;
    let (point, active, polished) = match polish(&qp, &point) {
        Some((pt, act)) => (pt, act, true),
        None => {
            let act = identify_active(&qp, &point);
            (point, act, false)
        }
    };

    let x: Vec<f64> = point.w.rows(0, n).iter().copied().collect();
    let y: Vec<f64> = point.lambda.iter().map(|v| -v).collect();
    let xv = DVector::from_column_slice(&x);
    let objective = 0.5 * xv.dot(&(&d.q * &xv)) + d.c.dot(&xv);
    let active_set = active
        .into_iter()
        .map(|(i, upper)| match (i < n, upper) {
            (true, false) => ActiveBound::VarLower(i),
            (true, true) => ActiveBound::VarUpper(i),
            (false, false) => ActiveBound::RowLower(i - n),
            (false, true) => ActiveBound::RowUpper(i - n),
        })
        .collect();
    Ok(OracleSolution {
        status: OracleStatus::Optimal,
        x,
        y,
        objective,
        active_set,
        polished,
    })
}

fn data_scale(d: &Dense) -> f64 {
    let finite = |v: &[f64]| v.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
    finite(&d.lv).max(finite(&d.uv)).max(finite(&d.lc)).max(finite(&d.uc))
}

/// `min ‖Ax − s‖₁` over `x ∈ X`, `s ∈ S`, as the elastic LP
/// `min 1ᵀ(p + q)` s.t. `Ax − s − p + q = 0`, `p, q ≥ 0`.
fn phase_one_distance(d: &Dense) -> Result<f64, OracleError> {
    let (n, m) = (d.n, d.m);
    if m == 0 {
        return Ok(0.0);
    }
    let dim = n + 3 * m;
    let mut b = DMatrix::zeros(m, dim);
    b.view_mut((0, 0), (m, n + m)).copy_from(&lifted_rows(d));
    for i in 0..m {
        b[(i, n + m + i)] = -1.0;
        b[(i, n + 2 * m + i)] = 1.0;
    }
    let mut g = DVector::zeros(dim);
    g.rows_mut(n + m, 2 * m).fill(1.0);
    let elastic = std::iter::repeat(0.0).take(2 * m);
    let qp = BoxQp {
        h: DMatrix::zeros(dim, dim),
        g,
        b,
        rhs: DVector::zeros(m),
        lo: d.lv.iter().chain(&d.lc).copied().chain(elastic).collect(),
        hi: d
            .uv
            .iter()
            .chain(&d.uc)
            .copied()
            .chain(std::iter::repeat(f64::INFINITY).take(2 * m))
            .collect(),
    };
    let pt = ipm::solve(&qp)?;
    Ok(pt.w.rows(n + m, 2 * m).sum())
}

/// Minimizes `cᵀd` over `d ∈ Recc(X) ∩ [−1, 1]ⁿ` with `Ad ∈ Recc(S)` and
/// `Qd = 0`; returns the minimizer when the value is clearly negative.
fn recession_ray(p: &QpProblem<f64>, d: &Dense) -> Result<Option<Vec<f64>>, OracleError> {
    let (n, m) = (d.n, d.m);
    let rx = cone_of(&p.var_bounds, ConeSide::Recession);
    let rs = cone_of(&p.con_bounds, ConeSide::Recession);
    if rx.iter().all(|k| *k == ConeKind::Zero) {
        return Ok(None);
    }
    let range_q = range_basis(&p.quad, &d.q);
    let k = range_q.nrows();

    let inf = f64::INFINITY;
    let cone_box = |kind: ConeKind, cap: f64| match kind {
        ConeKind::Zero => (0.0, 0.0),
        ConeKind::NonNeg => (0.0, cap),
        ConeKind::NonPos => (-cap, 0.0),
        ConeKind::Free => (-cap, cap),
    };
    let mut lo = Vec::with_capacity(n + m);
    let mut hi = Vec::with_capacity(n + m);
    for &kind in rx.iter() {
        let (l, u) = cone_box(kind, 1.0);
        lo.push(l);
        hi.push(u);
    }
    for &kind in rs.iter() {
        let (l, u) = cone_box(kind, inf);
        lo.push(l);
        hi.push(u);
    }
    let mut b = DMatrix::zeros(m + k, n + m);
    b.view_mut((0, 0), (m, n + m)).copy_from(&lifted_rows(d));
    b.view_mut((m, 0), (k, n)).copy_from(&range_q);
    let mut g = DVector::zeros(n + m);
    g.rows_mut(0, n).copy_from(&d.c);
    let qp = BoxQp {
        h: DMatrix::zeros(n + m, n + m),
        g,
        b,
        rhs: DVector::zeros(m + k),
        lo,
        hi,
    };
    let pt = ipm::solve(&qp)?;
    let ray: Vec<f64> = pt.w.rows(0, n).iter().copied().collect();
    let value = d.c.dot(&DVector::from_column_slice(&ray));
    Ok((value < -RAY_TOL * (1.0 + d.c.amax())).then_some(ray))
}

/// Orthonormal rows spanning the range of `Q`.
fn range_basis(op: &QuadOperator<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    if let QuadOperator::Diagonal(diag) = op {
        let idx: Vec<usize> = (0..n).filter(|&i| diag[i] != 0.0).collect();
        let mut r = DMatrix::zeros(idx.len(), n);
        for (row, &i) in idx.iter().enumerate() {
            r[(row, i)] = 1.0;
        }
        return r;
    }
    let eig = SymmetricEigen::new(q.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-10 * top.max(1.0)).collect();
    let mut r = DMatrix::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        r.row_mut(row).copy_from(&eig.eigenvectors.column(i).transpose());
    }
    r
}

/// Bounds judged active at an interior point: whichever of slack and
/// multiplier is smaller decides.
fn identify_active(qp: &BoxQp, pt: &IpmPoint) -> Vec<(usize, bool)> {
    let mut act = Vec::new();
    for i in 0..qp.g.len() {
        if pt.fixed[i] {
            continue;
        }
        if qp.lo[i].is_finite() && pt.w[i] - qp.lo[i] < pt.z_lo[i] {
            act.push((i, false));
        } else if qp.hi[i].is_finite() && qp.hi[i] - pt.w[i] < pt.z_hi[i] {
            act.push((i, true));
        }
    }
    act
}

/// Solves the equality-constrained KKT system on the identified active set
/// and accepts the result only if it is feasible with correctly signed
/// multipliers.
fn polish(qp: &BoxQp, pt: &IpmPoint) -> Option<(IpmPoint, Vec<(usize, bool)>)> {
    let n = qp.g.len();
    let m = qp.b.nrows();
    let active = identify_active(qp, pt);
    let pinned: Vec<(usize, f64)> = (0..n)
        .filter(|&i| pt.fixed[i])
        .map(|i| (i, qp.lo[i]))
        .chain(
            active
                .iter()
                .map(|&(i, upper)| (i, if upper { qp.hi[i] } else { qp.lo[i] })),
        )
        .collect();
    let k = pinned.len();

    // [H  −Bᵀ −Eᵀ] [w]   [−g]
    // [B   0   0 ] [λ] = [ b]
    // [E   0   0 ] [ν]   [ e]
    let dim = n + m + k;
    let mut kkt = DMatrix::zeros(dim, dim);
    kkt.view_mut((0, 0), (n, n)).copy_from(&qp.h);
    kkt.view_mut((0, n), (n, m)).copy_from(&(-qp.b.transpose()));
    kkt.view_mut((n, 0), (m, n)).copy_from(&qp.b);
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-&qp.g));
    rhs.rows_mut(n, m).copy_from(&qp.rhs);
    for (j, &(i, v)) in pinned.iter().enumerate() {
        kkt[(i, n + m + j)] = -1.0;
        kkt[(n + m + j, i)] = 1.0;
        rhs[n + m + j] = v;
    }
    let svd = kkt.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-13 * svd.singular_values.max()).ok()?;
    if (&kkt * &sol - &rhs).amax() > POLISH_TOL * (1.0 + rhs.amax()) {
        return None;
    }

    let w = sol.rows(0, n).into_owned();
    let lambda = sol.rows(n, m).into_owned();
    let scale = 1.0 + w.amax();
    for i in 0..n {
        if w[i] < qp.lo[i] - POLISH_TOL * scale || w[i] > qp.hi[i] + POLISH_TOL * scale {
            return None;
        }
    }
    let mut z_lo = DVector::zeros(n);
    let mut z_hi = DVector::zeros(n);
    let nu_scale = 1.0 + sol.rows(n + m, k).amax();
    let fixed_count = pt.fixed.iter().filter(|&&f| f).count();
    for (j, &(i, upper)) in active.iter().enumerate() {
        let nu = sol[n + m + fixed_count + j];
        if upper {
            if nu > POLISH_TOL * nu_scale {
                return None;
            }
            z_hi[i] = -nu;
        } else {
            if nu < -POLISH_TOL * nu_scale {
                return None;
            }
            z_lo[i] = nu;
        }
    }
    Some((
        IpmPoint {
            w,
            lambda,
            z_lo,
            z_hi,
            fixed: pt.fixed.clone(),
        },
        active,
    ))
}
