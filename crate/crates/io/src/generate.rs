//! Instance generators.
//!
//! Feasible instances are built backwards from a planted KKT point, so they
//! always have a finite optimum and the planted pair is available for
//! checks. Infeasible and unbounded families embed an explicit certificate.

use halqp::{Bounds, CsrMatrix, Error, QpProblem, QuadOperator, SymmetricMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const INF: f64 = f64::INFINITY;

/// Storage form of the generated quadratic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QStructure {
    Diagonal,
    Sparse,
    LowRank,
}

impl std::str::FromStr for QStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "diagonal" => Ok(QStructure::Diagonal),
            "sparse" => Ok(QStructure::Sparse),
            "low_rank" | "low-rank" => Ok(QStructure::LowRank),
            other => Err(format!("unknown Q structure `{other}`")),
        }
    }
}

/// Planted primal–dual optimum of a generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Sparse `rows × cols` Gaussian matrix; every row gets at least one entry.
fn sparse_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<(usize, f64)>> {
    (0..rows)
        .map(|_| {
            let mut row = Vec::new();
            for j in 0..cols {
                if rng.random_bool(density) {
                    row.push((j, normal(rng)));
                }
            }
            if row.is_empty() && cols > 0 {
                row.push((rng.random_range(0..cols), normal(rng)));
            }
            row
        })
        .collect()
}

fn to_csr(rows: &[Vec<(usize, f64)>], cols: usize) -> CsrMatrix<f64> {
    let trip: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
        .collect();
    CsrMatrix::from_triplets(rows.len(), cols, &trip).expect("generated indices in range")
}

/// `MᵀM` as upper-triangle triplets.
fn gram_upper(rows: &[Vec<(usize, f64)>]) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    for row in rows {
        for &(i, a) in row {
            for &(j, b) in row {
                if i <= j {
                    t.push((i, j, a * b));
                }
            }
        }
    }
    t
}

/// Removes the component of each row along `d`.
fn project_out(rows: &mut [Vec<(usize, f64)>], d: &[f64]) {
    let dd: f64 = d.iter().map(|v| v * v).sum();
    if dd == 0.0 {
        return;
    }
    let support: Vec<usize> = (0..d.len()).filter(|&i| d[i] != 0.0).collect();
    for row in rows.iter_mut() {
        let along: f64 = row.iter().map(|&(j, v)| v * d[j]).sum::<f64>() / dd;
        if along == 0.0 {
            continue;
        }
        let mut dense: std::collections::BTreeMap<usize, f64> = row.iter().copied().collect();
        for &i in &support {
            *dense.entry(i).or_insert(0.0) -= along * d[i];
        }
        *row = dense.into_iter().collect();
    }
}

/// Random PSD operator. Coordinates flagged in `null` are kept in the null
/// space of `Q` (`Qd = 0` for `d` supported there), given by `d` itself.
fn random_quad(rng: &mut ChaCha8Rng, n: usize, structure: QStructure, density: f64, null: Option<&[f64]>) -> QuadOperator<f64> {
    let zero_on = |i: usize| null.is_some_and(|d| d[i] != 0.0);
    match structure {
        QStructure::Diagonal => QuadOperator::Diagonal(
            (0..n)
                .map(|i| {
                    if zero_on(i) || rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.1..2.0)
                    }
                })
                .collect(),
        ),
        QStructure::Sparse => {
            let scale = 1.0 / (density * n as f64).max(1.0).sqrt();
            let mut m: Vec<Vec<(usize, f64)>> = sparse_gaussian(rng, n, n, density)
                .into_iter()
                .map(|r| r.into_iter().map(|(j, v)| (j, v * scale)).collect())
                .collect();
            if let Some(d) = null {
                project_out(&mut m, d);
            }
            let mut trip = gram_upper(&m);
            for i in 0..n {
                if !zero_on(i) && rng.random_bool(0.5) {
                    trip.push((i, i, rng.random_range(0.0..0.5)));
                }
            }
            QuadOperator::Sparse(SymmetricMatrix::from_triplets(n, &trip).expect("indices in range"))
        }
        QStructure::LowRank => {
            let k = n.clamp(1, 5);
            let mut p_trip = Vec::new();
            for i in 0..n {
                if !zero_on(i) && rng.random_bool(0.5) {
                    p_trip.push((i, i, rng.random_range(0.0..1.0)));
                }
            }
            let scale = 1.0 / (n as f64).sqrt();
            let mut r: Vec<Vec<(usize, f64)>> = sparse_gaussian(rng, k, n, density.max(0.5))
                .into_iter()
                .map(|row| row.into_iter().map(|(j, v)| (j, v * scale)).collect())
                .collect();
            if let Some(d) = null {
                project_out(&mut r, d);
            }
            QuadOperator::low_rank(
                SymmetricMatrix::from_triplets(n, &p_trip).expect("indices in range"),
                to_csr(&r, n),
            )
            .expect("factor shape")
        }
    }
}

/// Random feasible QP with a bounded optimum, together with its planted
/// optimal pair. Deterministic per seed.
pub fn planted_qp(n: usize, m: usize, structure: QStructure, density: f64, seed: u64) -> (QpProblem<f64>, Planted) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quad = random_quad(&mut rng, n, structure, density, None);
    let a_rows = sparse_gaussian(&mut rng, m, n, density);
    let a = to_csr(&a_rows, n);

    let mut x = vec![0.0; n];
    let mut r = vec![0.0; n];
    let (mut lv, mut uv) = (vec![-INF; n], vec![INF; n]);
    for i in 0..n {
        let xi = normal(&mut rng);
        x[i] = xi;
        let mult = |rng: &mut ChaCha8Rng| if rng.random_bool(0.9) { rng.random_range(0.1..1.0) } else { 0.0 };
        let gap = |rng: &mut ChaCha8Rng| rng.random_range(0.1..2.0);
        let active = rng.random_bool(0.4);
        match rng.random_range(0..20) {
            0..=1 => {}
            2..=8 => {
                if active {
                    lv[i] = xi;
                    r[i] = mult(&mut rng);
                } else {
                    lv[i] = xi - gap(&mut rng);
                }
            }
            9..=10 => {
                if active {
                    uv[i] = xi;
                    r[i] = -mult(&mut rng);
                } else {
                    uv[i] = xi + gap(&mut rng);
                }
            }
            11..=18 => {
                let (below, above) = (gap(&mut rng), gap(&mut rng));
                match (active, rng.random_bool(0.5)) {
                    (true, true) => {
                        lv[i] = xi;
                        uv[i] = xi + above;
                        r[i] = mult(&mut rng);
                    }
                    (true, false) => {
                        lv[i] = xi - below;
                        uv[i] = xi;
                        r[i] = -mult(&mut rng);
                    }
                    _ => {
                        lv[i] = xi - below;
                        uv[i] = xi + above;
                    }
                }
            }
            _ => {
                lv[i] = xi;
                uv[i] = xi;
                r[i] = normal(&mut rng);
            }
        }
    }

    let ax = a.matvec(&x).expect("shape");
    let mut y = vec![0.0; m];
    let (mut lc, mut uc) = (vec![-INF; m], vec![INF; m]);
    for i in 0..m {
        let v = ax[i];
        let active = rng.random_bool(0.5);
        let slack = rng.random_range(0.1..2.0);
        let mult = rng.random_range(0.1..1.0);
        match rng.random_range(0..10) {
            0..=1 => {
                lc[i] = v;
                uc[i] = v;
                y[i] = normal(&mut rng);
            }
            2..=4 => {
                uc[i] = if active { v } else { v + slack };
                y[i] = if active { mult } else { 0.0 };
            }
            5..=6 => {
                lc[i] = if active { v } else { v - slack };
                y[i] = if active { -mult } else { 0.0 };
            }
            7..=8 => {
                let width = rng.random_range(0.5..3.0);
                if active && rng.random_bool(0.5) {
                    lc[i] = v - width;
                    uc[i] = v;
                    y[i] = mult;
                } else if active {
                    lc[i] = v;
                    uc[i] = v + width;
                    y[i] = -mult;
                } else {
                    lc[i] = v - slack;
                    uc[i] = v + width;
                }
            }
            _ => {}
        }
    }

    let qx = quad.apply(&x).expect("shape");
    let aty = a.matvec_t(&y).expect("shape");
    let cost: Vec<f64> = (0..n).map(|i| r[i] - qx[i] - aty[i]).collect();
    let p = QpProblem::new(
        quad,
        cost,
        a,
        Bounds::new(lv, uv).expect("lengths"),
        Bounds::new(lc, uc).expect("lengths"),
    )
    .expect("generated instance is valid");
    (p, Planted { x, y })
}

/// [`planted_qp`] without the planted pair.
pub fn random_qp(n: usize, m: usize, structure: QStructure, density: f64, seed: u64) -> QpProblem<f64> {
    planted_qp(n, m, structure, density, seed).0
}

/// Feasible base instance plus one extra row that contradicts a positive
/// combination of existing finite bounds, so `{x ∈ X : Ax ∈ S}` is empty.
pub fn random_primal_infeasible(n: usize, m: usize, structure: QStructure, density: f64, seed: u64) -> QpProblem<f64> {
    let (base, _) = planted_qp(n, m, structure, density, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1f3a_5c7e);

    // candidates: (is_row, index, use_upper)
    let mut cands = Vec::new();
    for i in 0..m {
        let (l, u) = (base.con_bounds.lower()[i], base.con_bounds.upper()[i]);
        if u.is_finite() {
            cands.push((true, i, true));
        }
        if l.is_finite() {
            cands.push((true, i, false));
        }
    }
    for j in 0..n {
        let (l, u) = (base.var_bounds.lower()[j], base.var_bounds.upper()[j]);
        if u.is_finite() {
            cands.push((false, j, true));
        }
        if l.is_finite() {
            cands.push((false, j, false));
        }
    }
    let dense_a = base.constraint_matrix.to_dense();
    let mut row = vec![0.0; n];
    let mut bound = 0.0;
    if cands.is_empty() {
        // no finite bound anywhere: contradict a row with itself
        row[0] = 1.0;
    } else {
        let k = rng.random_range(1..=cands.len().min(3));
        let mut picked = Vec::new();
        while picked.len() < k {
            let c = cands[rng.random_range(0..cands.len())];
            if !picked.iter().any(|p: &(bool, usize, bool)| p.0 == c.0 && p.1 == c.1) {
                picked.push(c);
            }
        }
        for (is_row, idx, upper) in picked {
            let w = rng.random_range(0.5..2.0);
            let s = if upper { w } else { -w };
            if is_row {
                let b = if upper { base.con_bounds.upper()[idx] } else { base.con_bounds.lower()[idx] };
                for (r, &a) in row.iter_mut().zip(&dense_a[idx]) {
                    *r += s * a;
                }
                bound += s * b;
            } else {
                let b = if upper { base.var_bounds.upper()[idx] } else { base.var_bounds.lower()[idx] };
                row[idx] += s;
                bound += s * b;
            }
        }
    }
    let delta = rng.random_range(0.1..1.0);
    let (new_lo, new_hi) = if cands.is_empty() {
        // row 0 of x is free: x₀ ≥ 1 and x₀ ≤ 0 via two rows
        (vec![1.0, -INF], vec![INF, 0.0])
    } else {
        (vec![bound + delta], vec![INF])
    };
    let mut extra = vec![(0usize, 0usize, 0.0f64); 0];
    let extra_rows = new_lo.len();
    for r in 0..extra_rows {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                extra.push((r, j, v));
            }
        }
    }
    let a = base
        .constraint_matrix
        .vstack(&CsrMatrix::from_triplets(extra_rows, n, &extra).expect("indices"))
        .expect("same columns");
    let mut lc = base.con_bounds.lower().to_vec();
    let mut uc = base.con_bounds.upper().to_vec();
    lc.extend(new_lo);
    uc.extend(new_hi);
    QpProblem::new(base.quad, base.cost, a, base.var_bounds, Bounds::new(lc, uc).expect("lengths"))
        .expect("valid instance")
}

/// Feasible instance with a planted direction `d` of unbounded descent:
/// `d ∈ Recc(X)`, `Ad ∈ Recc(S)`, `Qd = 0` and `cᵀd < 0`.
pub fn random_dual_infeasible(n: usize, m: usize, structure: QStructure, density: f64, seed: u64) -> QpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=(n / 3).max(1));
    let mut d = vec![0.0; n];
    let mut support: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        support.swap(i, j);
        let mag = rng.random_range(0.5..1.0);
        d[support[i]] = if rng.random_bool(0.5) { mag } else { -mag };
    }

    let quad = random_quad(&mut rng, n, structure, density, Some(&d));
    let x0: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let (mut lv, mut uv) = (vec![-INF; n], vec![INF; n]);
    for i in 0..n {
        let gap = rng.random_range(0.1..2.0);
        let kind = rng.random_range(0..4);
        if d[i] > 0.0 {
            if kind > 0 {
                lv[i] = x0[i] - gap;
            }
        } else if d[i] < 0.0 {
            if kind > 0 {
                uv[i] = x0[i] + gap;
            }
        } else {
            match kind {
                0 => {}
                1 => lv[i] = x0[i] - gap,
                2 => uv[i] = x0[i] + gap,
                _ => {
                    lv[i] = x0[i] - gap;
                    uv[i] = x0[i] + rng.random_range(0.1..2.0);
                }
            }
        }
    }

    let mut a_rows = sparse_gaussian(&mut rng, m, n, density);
    for row in a_rows.iter_mut() {
        if rng.random_bool(0.5) {
            project_out(std::slice::from_mut(row), &d);
        }
    }
    let a = to_csr(&a_rows, n);
    let ax = a.matvec(&x0).expect("shape");
    let ad = a.matvec(&d).expect("shape");
    let (mut lc, mut uc) = (vec![-INF; m], vec![INF; m]);
    for i in 0..m {
        let slack = rng.random_range(0.0..1.0);
        let kind = rng.random_range(0..4);
        if ad[i] > 1e-12 {
            if kind > 0 {
                lc[i] = ax[i] - slack;
            }
        } else if ad[i] < -1e-12 {
            if kind > 0 {
                uc[i] = ax[i] + slack;
            }
        } else {
            match kind {
                0 => {
                    lc[i] = ax[i];
                    uc[i] = ax[i];
                }
                1 => uc[i] = ax[i] + slack,
                2 => lc[i] = ax[i] - slack,
                _ => {
                    lc[i] = ax[i] - slack;
                    uc[i] = ax[i] + rng.random_range(0.1..1.0);
                }
            }
        }
    }

    let mut cost: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let cd: f64 = cost.iter().zip(&d).map(|(a, b)| a * b).sum();
    let target = rng.random_range(0.5..1.5);
    for i in 0..n {
        cost[i] -= (cd + target) / dd * d[i];
    }
    QpProblem::new(
        quad,
        cost,
        a,
        Bounds::new(lv, uv).expect("lengths"),
        Bounds::new(lc, uc).expect("lengths"),
    )
    .expect("valid instance")
}

/// Default regularization weight `0.01·‖Aᵀb‖∞`.
pub fn default_lasso_lambda(a: &CsrMatrix<f64>, b: &[f64]) -> Result<f64, Error> {
    let atb = a.matvec_t(b)?;
    Ok(0.01 * atb.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// QP form of `min ‖Ax − b‖² + λ‖x‖₁` over `(x, t, y)`:
///
/// ```text
/// minimize   yᵀy + λ·1ᵀt
/// subject to y − Ax = −b,  x − t ≤ 0,  −x − t ≤ 0,  t ≥ 0
/// ```
///
/// `lambda = 0` selects [`default_lasso_lambda`].
pub fn make_lasso_qp(a: &CsrMatrix<f64>, b: &[f64], lambda: f64) -> Result<QpProblem<f64>, Error> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "lasso right-hand side",
            expected: m,
            found: b.len(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("lasso weight must be nonnegative, got {lambda}")));
    }
    let lambda = if lambda == 0.0 { default_lasso_lambda(a, b)? } else { lambda };

    let nv = 2 * n + m;
    let (xo, to, yo) = (0, n, 2 * n);
    let mut trip = Vec::with_capacity(a.nnz() + m + 4 * n);
    for (i, j, v) in a.triplets() {
        trip.push((i, xo + j, -v));
    }
    for i in 0..m {
        trip.push((i, yo + i, 1.0));
    }
    for j in 0..n {
        trip.push((m + j, xo + j, 1.0));
        trip.push((m + j, to + j, -1.0));
        trip.push((m + n + j, xo + j, -1.0));
        trip.push((m + n + j, to + j, -1.0));
    }
    let rows = CsrMatrix::from_triplets(m + 2 * n, nv, &trip)?;

    let mut q = vec![0.0; nv];
    q[yo..].iter_mut().for_each(|v| *v = 2.0);
    let mut cost = vec![0.0; nv];
    cost[to..yo].iter_mut().for_each(|v| *v = lambda);

    let mut lv = vec![-INF; nv];
    lv[to..yo].iter_mut().for_each(|v| *v = 0.0);
    let uv = vec![INF; nv];
    let mut lc: Vec<f64> = b.iter().map(|v| -v).collect();
    let mut uc = lc.clone();
    lc.extend(std::iter::repeat(-INF).take(2 * n));
    uc.extend(std::iter::repeat(0.0).take(2 * n));

    QpProblem::new(QuadOperator::Diagonal(q), cost, rows, Bounds::new(lv, uv)?, Bounds::new(lc, uc)?)
}

/// Sparse Gaussian `A` (`m × n`) and `b = A x_true + noise` with a sparse
/// `x_true`.
pub fn random_lasso_data(m: usize, n: usize, density: f64, seed: u64) -> (CsrMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = to_csr(&sparse_gaussian(&mut rng, m, n, density), n);
    let x_true: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.2) { normal(&mut rng) } else { 0.0 })
        .collect();
    let mut b = a.matvec(&x_true).expect("shape");
    for v in b.iter_mut() {
        *v += 0.1 * normal(&mut rng);
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_structured() {
        for s in [QStructure::Diagonal, QStructure::Sparse, QStructure::LowRank] {
            let a = random_qp(12, 6, s, 0.3, 9);
            let b = random_qp(12, 6, s, 0.3, 9);
            assert_eq!(a, b);
            a.validate().unwrap();
            assert!(a.psd_spot_check(1));
        }
        assert!(random_qp(5, 2, QStructure::Diagonal, 0.5, 1).quad.is_diagonal());
        assert!(matches!(
            random_qp(5, 2, QStructure::LowRank, 0.5, 1).quad,
            QuadOperator::SparseLowRank { .. }
        ));
    }

    #[test]
    fn planted_point_is_feasible() {
        for seed in 0..20 {
            let (p, pl) = planted_qp(10, 5, QStructure::Sparse, 0.4, seed);
            assert!(p.var_bounds.contains(&pl.x, 1e-12));
            let ax = p.constraint_matrix.matvec(&pl.x).unwrap();
            assert!(p.con_bounds.contains(&ax, 1e-12));
        }
    }

    #[test]
    fn lasso_dimensions() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0]]).unwrap();
        let p = make_lasso_qp(&a, &[1.0, 2.0], 0.5).unwrap();
        assert_eq!((p.num_vars(), p.num_rows()), (8, 8));
        assert!(make_lasso_qp(&a, &[1.0], 0.5).is_err());
    }

    #[test]
    fn lasso_objective_identity() {
        let (a, b) = random_lasso_data(7, 4, 0.6, 3);
        let lambda = 0.3;
        let p = make_lasso_qp(&a, &b, lambda).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| normal(&mut rng)).collect();
            let ax = a.matvec(&x).unwrap();
            let y: Vec<f64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
            let mut z = x.clone();
            z.extend(x.iter().map(|v| v.abs()));
            z.extend(y.iter().copied());
            let direct = y.iter().map(|v| v * v).sum::<f64>() + lambda * x.iter().map(|v| v.abs()).sum::<f64>();
            assert!((p.objective(&z) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            let az = p.constraint_matrix.matvec(&z).unwrap();
            assert!(p.con_bounds.contains(&az, 1e-12));
        }
    }

    #[test]
    fn lasso_default_lambda() {
        let a = CsrMatrix::from_dense(&[vec![1.0, -2.0]]).unwrap();
        let p = make_lasso_qp(&a, &[3.0], 0.0).unwrap();
        assert_eq!(p.cost[2], 0.06);
    }
}
