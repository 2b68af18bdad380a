//! Problem data, box arithmetic over the extended reals, and the projections
//! induced by the bound structure.
//!
//! The instance is
//!
//! ```text
//! minimize   ½ xᵀQx + cᵀx
//! subject to l_v ≤ x ≤ u_v,   l_c ≤ Ax ≤ u_c
//! ```
//!
//! where missing bounds are IEEE infinities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BoundSet, Error, Result};
use crate::linalg::{dot, norm2, CsrMatrix, QuadOperator};
use crate::Scalar;

/// Componentwise box `[lower, upper]`. `-∞` may only appear in `lower` and
/// `+∞` only in `upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: lower.len(),
                found: upper.len(),
            });
        }
        Ok(Bounds { lower, upper })
    }

    /// Box without checking lengths or ordering; `validate` catches both.
    pub fn new_unchecked(lower: Vec<T>, upper: Vec<T>) -> Self {
        Bounds { lower, upper }
    }

    pub fn free(n: usize) -> Self {
        Bounds {
            lower: vec![T::neg_infinity(); n],
            upper: vec![T::infinity(); n],
        }
    }

    pub fn nonneg(n: usize) -> Self {
        Bounds {
            lower: vec![T::zero(); n],
            upper: vec![T::infinity(); n],
        }
    }

    pub fn equal(values: Vec<T>) -> Self {
        Bounds {
            lower: values.clone(),
            upper: values,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    #[inline]
    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    #[inline]
    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    /// Checks ordering and NaN; the first offending index is reported.
    pub fn check(&self, set: BoundSet) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::DimensionMismatch {
                context: "bounds",
                expected: self.lower.len(),
                found: self.upper.len(),
            });
        }
        let context = match set {
            BoundSet::Variable => "variable bounds",
            BoundSet::Constraint => "constraint bounds",
        };
        for (i, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::NonFiniteData { context, index: i });
            }
            if l > u || l == T::infinity() || u == T::neg_infinity() {
                return Err(Error::InvertedBound { set, index: i });
            }
        }
        Ok(())
    }

    /// Largest finite bound magnitude; infinite entries are ignored and an
    /// all-infinite box gives zero.
    pub fn finite_norm_inf(&self) -> T {
        self.lower
            .iter()
            .chain(&self.upper)
            .filter(|v| v.is_finite())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol)
    }
}

/// Support function of the box, `p(z; l, u) = uᵀz⁺ − lᵀz⁻`, over the extended
/// reals with `0·∞ = 0`. Returns `+∞` when a nonzero component meets an
/// infinite bound on its side.
pub fn support_p<T: Scalar>(z: &[T], b: &Bounds<T>) -> T {
    debug_assert_eq!(z.len(), b.len());
    let mut acc = T::zero();
    for (&zi, (&l, &u)) in z.iter().zip(b.lower.iter().zip(&b.upper)) {
        if zi > T::zero() {
            if u == T::infinity() {
                return T::infinity();
            }
            acc += u * zi;
        } else if zi < T::zero() {
            if l == T::neg_infinity() {
                return T::infinity();
            }
            acc += l * zi;
        }
    }
    acc
}

/// Componentwise clamp onto the box.
pub fn project_box<T: Scalar>(x: &[T], b: &Bounds<T>) -> Vec<T> {
    let mut out = x.to_vec();
    project_box_in_place(&mut out, b);
    out
}

#[inline]
pub fn project_box_in_place<T: Scalar>(x: &mut [T], b: &Bounds<T>) {
    debug_assert_eq!(x.len(), b.len());
    for (v, (&l, &u)) in x.iter_mut().zip(b.lower.iter().zip(&b.upper)) {
        *v = v.max(l).min(u);
    }
}

/// Per-coordinate sign cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Zero,
    NonNeg,
    NonPos,
    Free,
}

impl ConeKind {
    #[inline]
    pub fn project<T: Scalar>(self, v: T) -> T {
        match self {
            ConeKind::Zero => T::zero(),
            ConeKind::NonNeg => v.max(T::zero()),
            ConeKind::NonPos => v.min(T::zero()),
            ConeKind::Free => v,
        }
    }
}

/// Which cone a box row induces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSide {
    /// Sign set of the row multiplier `y` (constraint bounds).
    DualY,
    /// Sign set of the reduced cost `r` (variable bounds).
    DualR,
    /// Recession cone of the box itself.
    Recession,
}

/// Cone induced by one row from its finiteness pattern.
pub fn cone_kind(lower_finite: bool, upper_finite: bool, side: ConeSide) -> ConeKind {
    use ConeKind::*;
    match (side, lower_finite, upper_finite) {
        (ConeSide::DualY, false, false) => Zero,
        (ConeSide::DualY, false, true) => NonNeg,
        (ConeSide::DualY, true, false) => NonPos,
        (ConeSide::DualY, true, true) => Free,
        (ConeSide::DualR, false, false) => Zero,
        (ConeSide::DualR, false, true) => NonPos,
        (ConeSide::DualR, true, false) => NonNeg,
        (ConeSide::DualR, true, true) => Free,
        (ConeSide::Recession, true, true) => Zero,
        (ConeSide::Recession, false, true) => NonPos,
        (ConeSide::Recession, true, false) => NonNeg,
        (ConeSide::Recession, false, false) => Free,
    }
}

pub fn cone_of<T: Scalar>(b: &Bounds<T>, side: ConeSide) -> Vec<ConeKind> {
    b.lower
        .iter()
        .zip(&b.upper)
        .map(|(l, u)| cone_kind(l.is_finite(), u.is_finite(), side))
        .collect()
}

pub fn project_cone<T: Scalar>(z: &[T], cones: &[ConeKind]) -> Vec<T> {
    debug_assert_eq!(z.len(), cones.len());
    z.iter().zip(cones).map(|(&v, k)| k.project(v)).collect()
}

/// `‖z − proj_K(z)‖∞`.
pub fn cone_violation<T: Scalar>(z: &[T], cones: &[ConeKind]) -> T {
    z.iter()
        .zip(cones)
        .fold(T::zero(), |acc, (&v, k)| acc.max((v - k.project(v)).abs()))
}

/// A convex QP instance.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem<T> {
    pub quad: QuadOperator<T>,
    pub cost: Vec<T>,
    pub constraint_matrix: CsrMatrix<T>,
    pub var_bounds: Bounds<T>,
    pub con_bounds: Bounds<T>,
    /// Constant added to reported objective values only.
    pub objective_offset: T,
}

impl<T: Scalar> QpProblem<T> {
    /// Assembles and validates an instance.
    pub fn new(
        quad: QuadOperator<T>,
        cost: Vec<T>,
        constraint_matrix: CsrMatrix<T>,
        var_bounds: Bounds<T>,
        con_bounds: Bounds<T>,
    ) -> Result<Self> {
        let p = QpProblem {
            quad,
            cost,
            constraint_matrix,
            var_bounds,
            con_bounds,
            objective_offset: T::zero(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraint_matrix.rows()
    }

    /// Checks shapes, bound ordering and NaN/infinite data; returns the first
    /// violation found. PSD-ness of `Q` is not checked here.
    pub fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        let checks = [
            ("quadratic term", self.quad.dim()),
            ("constraint matrix columns", self.constraint_matrix.cols()),
            ("variable bounds", self.var_bounds.len()),
        ];
        for (context, found) in checks {
            if found != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    found,
                });
            }
        }
        if self.con_bounds.len() != self.constraint_matrix.rows() {
            return Err(Error::DimensionMismatch {
                context: "constraint bounds",
                expected: self.constraint_matrix.rows(),
                found: self.con_bounds.len(),
            });
        }
        self.var_bounds.check(BoundSet::Variable)?;
        self.con_bounds.check(BoundSet::Constraint)?;
        if let Some(i) = self.cost.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData { context: "cost", index: i });
        }
        if let Some(i) = self.constraint_matrix.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                context: "constraint matrix",
                index: i,
            });
        }
        let quad_ok = match &self.quad {
            QuadOperator::Diagonal(q) => q.iter().position(|v| !v.is_finite() || *v < T::zero()),
            QuadOperator::Sparse(p) => p.upper().values().iter().position(|v| !v.is_finite()),
            QuadOperator::SparseLowRank { p, r } => p
                .upper()
                .values()
                .iter()
                .chain(r.values())
                .position(|v| !v.is_finite()),
        };
        if let Some(i) = quad_ok {
            return Err(Error::NonFiniteData {
                context: "quadratic term",
                index: i,
            });
        }
        if !self.objective_offset.is_finite() {
            return Err(Error::NonFiniteData {
                context: "objective offset",
                index: 0,
            });
        }
        Ok(())
    }

    /// `½xᵀQx + cᵀx` (offset excluded).
    pub fn objective(&self, x: &[T]) -> T {
        let qx = self.quad.apply(x).expect("dimension checked by caller");
        T::lit(0.5) * dot(x, &qx) + dot(&self.cost, x)
    }

    /// Randomized PSD spot check: `xᵀQx ≥ −1e-10·‖x‖²·‖Q‖` on 16 random
    /// vectors. Cheap stand-in for an exact eigenvalue test.
    pub fn psd_spot_check(&self, seed: u64) -> bool {
        let n = self.num_vars();
        if n == 0 {
            return true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.quad.norm_inf_bound();
        (0..16).all(|_| {
            let x: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
            let nx = norm2(&x);
            let q = self.quad.quad_form(&x).expect("square operator");
            q >= -T::lit(1e-10) * nx * nx * scale
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn b(l: &[f64], u: &[f64]) -> Bounds<f64> {
        Bounds::new(l.to_vec(), u.to_vec()).unwrap()
    }

    #[test]
    fn support_function_examples() {
        assert_eq!(support_p(&[1.0, -1.0], &b(&[0.0, 1.0], &[2.0, 3.0])), 1.0);
        assert_eq!(support_p(&[0.0, 0.0], &b(&[-5.0, 1.0], &[2.0, 3.0])), 0.0);
        assert_eq!(support_p(&[1.0], &b(&[0.0], &[INF])), INF);
        assert_eq!(support_p(&[-1.0], &b(&[-INF], &[0.0])), INF);
        // zero component against an infinite bound contributes nothing
        assert_eq!(support_p(&[0.0, 2.0], &b(&[-INF, 0.0], &[INF, 1.0])), 2.0);
    }

    #[test]
    fn box_projection_examples() {
        assert_eq!(project_box(&[5.0], &b(&[0.0], &[3.0])), vec![3.0]);
        assert_eq!(project_box(&[1.5], &b(&[0.0], &[3.0])), vec![1.5]);
        assert_eq!(
            project_box(&[-2.0, 7.0], &b(&[-INF, 0.0], &[0.0, INF])),
            vec![-2.0, 7.0]
        );
    }

    #[test]
    fn cone_tables() {
        let rows = b(&[-INF, -INF, 0.0, 0.0], &[INF, 5.0, INF, 3.0]);
        use ConeKind::*;
        assert_eq!(cone_of(&rows, ConeSide::DualY), vec![Zero, NonNeg, NonPos, Free]);
        assert_eq!(cone_of(&rows, ConeSide::DualR), vec![Zero, NonPos, NonNeg, Free]);
        assert_eq!(cone_of(&rows, ConeSide::Recession), vec![Free, NonPos, NonNeg, Zero]);
    }

    #[test]
    fn cone_projection_examples() {
        use ConeKind::*;
        assert_eq!(project_cone(&[-3.0], &[NonNeg]), vec![0.0]);
        assert_eq!(project_cone(&[4.0], &[Free]), vec![4.0]);
        assert_eq!(project_cone(&[2.0, -2.0], &[Zero, NonPos]), vec![0.0, -2.0]);
        assert_eq!(cone_violation(&[2.0, -2.0], &[Zero, NonNeg]), 2.0);
    }

    fn tiny_problem() -> QpProblem<f64> {
        QpProblem::new(
            QuadOperator::Diagonal(vec![1.0, 0.0]),
            vec![1.0, -1.0],
            CsrMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap(),
            Bounds::nonneg(2),
            b(&[-INF], &[4.0]),
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_well_formed() {
        assert!(tiny_problem().validate().is_ok());
    }

    #[test]
    fn validate_rejects_inverted_bound() {
        let mut p = tiny_problem();
        p.var_bounds = Bounds::new_unchecked(vec![1.0, 0.0], vec![0.0, 1.0]);
        assert_eq!(
            p.validate(),
            Err(Error::InvertedBound {
                set: BoundSet::Variable,
                index: 0
            })
        );
        let mut p = tiny_problem();
        p.con_bounds = Bounds::new_unchecked(vec![INF], vec![INF]);
        assert!(matches!(p.validate(), Err(Error::InvertedBound { .. })));
    }

    #[test]
    fn validate_rejects_shape_mismatch() {
        let mut p = tiny_problem();
        p.constraint_matrix = CsrMatrix::from_dense(&[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(p.validate(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn validate_rejects_nan() {
        let mut p = tiny_problem();
        p.cost[1] = f64::NAN;
        assert_eq!(
            p.validate(),
            Err(Error::NonFiniteData {
                context: "cost",
                index: 1
            })
        );
        let mut p = tiny_problem();
        p.var_bounds = Bounds::new_unchecked(vec![0.0, f64::NAN], vec![1.0, 1.0]);
        assert!(matches!(p.validate(), Err(Error::NonFiniteData { .. })));
    }

    #[test]
    fn psd_spot_check_flags_indefinite() {
        let mut p = tiny_problem();
        assert!(p.psd_spot_check(1));
        p.quad = QuadOperator::Sparse(
            SymmetricMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap(),
        );
        assert!(!p.psd_spot_check(1));
    }

    fn bounds_strategy(n: usize) -> impl Strategy<Value = Bounds<f64>> {
        proptest::collection::vec((-5.0f64..5.0, 0.0f64..5.0, 0u8..4), n).prop_map(|rows| {
            let (l, u): (Vec<f64>, Vec<f64>) = rows
                .into_iter()
                .map(|(lo, width, kind)| match kind {
                    0 => (lo, lo + width),
                    1 => (-INF, lo + width),
                    2 => (lo, INF),
                    _ => (-INF, INF),
                })
                .unzip();
            Bounds::new(l, u).unwrap()
        })
    }

    proptest! {
        #[test]
        fn support_function_dominates_box_points(
            (bx, z, t) in (1usize..8).prop_flat_map(|n| (
                bounds_strategy(n),
                proptest::collection::vec(-3.0f64..3.0, n),
                proptest::collection::vec(0.0f64..1.0, n),
            ))
        ) {
            let p = support_p(&z, &bx);
            // sample a point of the box (infinite sides truncated)
            let s: Vec<f64> = (0..z.len()).map(|i| {
                let l = bx.lower()[i].max(-10.0);
                let u = bx.upper()[i].min(10.0);
                l + t[i] * (u - l)
            }).collect();
            prop_assert!(p >= dot(&z, &s) - 1e-9);
        }

        #[test]
        fn support_function_positively_homogeneous(
            (bx, z) in (1usize..8).prop_flat_map(|n| (
                bounds_strategy(n),
                proptest::collection::vec(-3.0f64..3.0, n),
            )),
            alpha in 0.0f64..10.0,
        ) {
            let p = support_p(&z, &bx);
            let zs: Vec<f64> = z.iter().map(|v| alpha * v).collect();
            let ps = support_p(&zs, &bx);
            if p.is_finite() && ps.is_finite() {
                prop_assert!((ps - alpha * p).abs() <= 1e-9 * (1.0 + ps.abs()));
            }
        }

        #[test]
        fn projections_idempotent_and_nonexpansive(
            (bx, a, c) in (1usize..8).prop_flat_map(|n| (
                bounds_strategy(n),
                proptest::collection::vec(-20.0f64..20.0, n),
                proptest::collection::vec(-20.0f64..20.0, n),
            ))
        ) {
            let pa = project_box(&a, &bx);
            prop_assert_eq!(&project_box(&pa, &bx), &pa);
            let pc = project_box(&c, &bx);
            prop_assert!(crate::linalg::dist2(&pa, &pc) <= crate::linalg::dist2(&a, &c) + 1e-12);

            for side in [ConeSide::DualY, ConeSide::DualR, ConeSide::Recession] {
                let k = cone_of(&bx, side);
                let ka = project_cone(&a, &k);
                prop_assert_eq!(&project_cone(&ka, &k), &ka);
                let kc = project_cone(&c, &k);
                prop_assert!(crate::linalg::dist2(&ka, &kc) <= crate::linalg::dist2(&a, &c) + 1e-12);
            }
        }
    }
}
