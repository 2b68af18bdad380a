//! Dense primal–dual interior point method for
//!
//! ```text
//! minimize ½wᵀHw + gᵀw  s.t.  Bw = b,  lo ≤ w ≤ hi
//! ```
//!
//! Mehrotra predictor–corrector on the normal KKT system. Variables with
//! `lo = hi` are turned into equality rows.

use nalgebra::{DMatrix, DVector};

use crate::OracleError;

#[derive(Debug, Clone)]
pub(crate) struct BoxQp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub b: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmPoint {
    pub w: DVector<f64>,
    /// Multipliers of the original `Bw = b` rows (fixed-variable rows
    /// stripped).
    pub lambda: DVector<f64>,
    /// Bound multipliers, zero where the bound is absent or the variable is
    /// fixed.
    pub z_lo: DVector<f64>,
    pub z_hi: DVector<f64>,
    pub fixed: Vec<bool>,
}

const MAX_ITERS: usize = 400;
const REG: f64 = 1e-11;
const TOL: f64 = 1e-11;

pub(crate) fn solve(p: &BoxQp) -> Result<IpmPoint, OracleError> {
    let n = p.g.len();
    let m0 = p.b.nrows();
    let fixed: Vec<bool> = (0..n).map(|i| p.lo[i] == p.hi[i]).collect();
    let fixed_idx: Vec<usize> = (0..n).filter(|&i| fixed[i]).collect();
    let m = m0 + fixed_idx.len();

    let mut b = DMatrix::zeros(m, n);
    b.view_mut((0, 0), (m0, n)).copy_from(&p.b);
    let mut rhs = DVector::zeros(m);
    rhs.rows_mut(0, m0).copy_from(&p.rhs);
    for (k, &i) in fixed_idx.iter().enumerate() {
        b[(m0 + k, i)] = 1.0;
        rhs[m0 + k] = p.lo[i];
    }

    let has_lo: Vec<bool> = (0..n).map(|i| !fixed[i] && p.lo[i].is_finite()).collect();
    let has_hi: Vec<bool> = (0..n).map(|i| !fixed[i] && p.hi[i].is_finite()).collect();
    let ncomp = has_lo.iter().chain(&has_hi).filter(|&&v| v).count();

    let mut w = DVector::from_fn(n, |i, _| match (has_lo[i], has_hi[i]) {
        (true, true) => 0.5 * (p.lo[i] + p.hi[i]),
        (true, false) => p.lo[i] + 1.0,
        (false, true) => p.hi[i] - 1.0,
        (false, false) => {
            if fixed[i] {
                p.lo[i]
            } else {
                0.0
            }
        }
    });
    let mut lambda = DVector::zeros(m);
    let mut zl = DVector::from_fn(n, |i, _| if has_lo[i] { 1.0 } else { 0.0 });
    let mut zu = DVector::from_fn(n, |i, _| if has_hi[i] { 1.0 } else { 0.0 });

    let g_scale = 1.0 + p.g.amax();
    let b_scale = 1.0 + rhs.amax();

    for _ in 0..MAX_ITERS {
        let sl = DVector::from_fn(n, |i, _| if has_lo[i] { w[i] - p.lo[i] } else { 1.0 });
        let su = DVector::from_fn(n, |i, _| if has_hi[i] { p.hi[i] - w[i] } else { 1.0 });
        let rd = &p.h * &w + &p.g - b.tr_mul(&lambda) - &zl + &zu;
        let rp = &b * &w - &rhs;
        let mu = if ncomp == 0 {
            0.0
        } else {
            (sl.component_mul(&zl).sum() + su.component_mul(&zu).sum()) / ncomp as f64
        };
        if rp.amax() <= TOL * b_scale && rd.amax() <= TOL * g_scale && mu <= TOL * 0.1 {
            return Ok(IpmPoint {
                w,
                lambda: lambda.rows(0, m0).into_owned(),
                z_lo: zl,
                z_hi: zu,
                fixed,
            });
        }
        if !w.iter().all(|v| v.is_finite()) || w.amax() > 1e14 || lambda.amax() > 1e14 {
            return Err(OracleError::NoConvergence);
        }

        let mut k = DMatrix::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).copy_from(&p.h);
        for i in 0..n {
            k[(i, i)] += zl[i] / sl[i] * f64::from(u8::from(has_lo[i]))
                + zu[i] / su[i] * f64::from(u8::from(has_hi[i]))
                + REG;
        }
        k.view_mut((0, n), (n, m)).copy_from(&(-b.transpose()));
        k.view_mut((n, 0), (m, n)).copy_from(&b);
        for j in 0..m {
            k[(n + j, n + j)] = -REG;
        }
        let lu = k.lu();

        let direction = |rl: &DVector<f64>, ru: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            let mut top = -&rd;
            for i in 0..n {
                if has_lo[i] {
                    top[i] += rl[i] / sl[i];
                }
                if has_hi[i] {
                    top[i] -= ru[i] / su[i];
                }
            }
            let mut r = DVector::zeros(n + m);
            r.rows_mut(0, n).copy_from(&top);
            r.rows_mut(n, m).copy_from(&(-&rp));
            let sol = lu.solve(&r)?;
            let dw = sol.rows(0, n).into_owned();
            let dl = sol.rows(n, m).into_owned();
            let dzl = DVector::from_fn(n, |i, _| if has_lo[i] { (rl[i] - zl[i] * dw[i]) / sl[i] } else { 0.0 });
            let dzu = DVector::from_fn(n, |i, _| if has_hi[i] { (ru[i] + zu[i] * dw[i]) / su[i] } else { 0.0 });
            Some((dw, dl, dzl, dzu))
        };
        let max_step = |dw: &DVector<f64>, dzl: &DVector<f64>, dzu: &DVector<f64>| -> f64 {
            let mut a: f64 = 1.0;
            for i in 0..n {
                if has_lo[i] {
                    if dw[i] < 0.0 {
                        a = a.min(-sl[i] / dw[i]);
                    }
                    if dzl[i] < 0.0 {
                        a = a.min(-zl[i] / dzl[i]);
                    }
                }
                if has_hi[i] {
                    if dw[i] > 0.0 {
                        a = a.min(su[i] / dw[i]);
                    }
                    if dzu[i] < 0.0 {
                        a = a.min(-zu[i] / dzu[i]);
                    }
                }
            }
            a
        };

        let rl_aff = DVector::from_fn(n, |i, _| if has_lo[i] { -sl[i] * zl[i] } else { 0.0 });
        let ru_aff = DVector::from_fn(n, |i, _| if has_hi[i] { -su[i] * zu[i] } else { 0.0 });
        let (dw_a, _, dzl_a, dzu_a) = direction(&rl_aff, &ru_aff).ok_or(OracleError::NoConvergence)?;
        let a_aff = max_step(&dw_a, &dzl_a, &dzu_a);
        let sigma = if ncomp == 0 {
            0.0
        } else {
            let mut acc = 0.0;
            for i in 0..n {
                if has_lo[i] {
                    acc += (sl[i] + a_aff * dw_a[i]) * (zl[i] + a_aff * dzl_a[i]);
                }
                if has_hi[i] {
                    acc += (su[i] - a_aff * dw_a[i]) * (zu[i] + a_aff * dzu_a[i]);
                }
            }
            let mu_aff = acc / ncomp as f64;
            (mu_aff / mu).powi(3).clamp(0.0, 1.0)
        };
        let rl = DVector::from_fn(n, |i, _| {
            if has_lo[i] {
                sigma * mu - sl[i] * zl[i] - dw_a[i] * dzl_a[i]
            } else {
                0.0
            }
        });
        let ru = DVector::from_fn(n, |i, _| {
            if has_hi[i] {
                sigma * mu - su[i] * zu[i] + dw_a[i] * dzu_a[i]
            } else {
                0.0
            }
        });
        let (dw, dl, dzl, dzu) = direction(&rl, &ru).ok_or(OracleError::NoConvergence)?;
        let alpha = (0.995 * max_step(&dw, &dzl, &dzu)).min(1.0);
        w += alpha * dw;
        lambda += alpha * dl;
        zl += alpha * dzl;
        zu += alpha * dzu;
    }
    Err(OracleError::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_constrained_scalar() {
        // min ½w² + w, w ≥ 0 → w = 0, z = 1
        let p = BoxQp {
            h: DMatrix::from_element(1, 1, 1.0),
            g: DVector::from_element(1, 1.0),
            b: DMatrix::zeros(0, 1),
            rhs: DVector::zeros(0),
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
        };
        let s = solve(&p).unwrap();
        assert!(s.w[0].abs() < 1e-9);
        assert!((s.z_lo[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_fixed() {
        // min w0² + w1², w0 + w1 = 2, w2 fixed at 3
        let p = BoxQp {
            h: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 0.0])),
            g: DVector::zeros(3),
            b: DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]),
            rhs: DVector::from_element(1, 2.0),
            lo: vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 3.0],
            hi: vec![f64::INFINITY, f64::INFINITY, 3.0],
        };
        let s = solve(&p).unwrap();
        assert!((s.w[0] - 1.0).abs() < 1e-9 && (s.w[1] - 1.0).abs() < 1e-9);
        assert!((s.w[2] - 3.0).abs() < 1e-12);
        assert!((s.lambda[0] - 2.0).abs() < 1e-9);
    }
}
