//! Primal subproblem of one PDHG step:
//!
//! ```text
//! minimize_{x ∈ X}  φ(x) = ½xᵀQx + gᵀx + ‖x − x_c‖² / (2τ)
//! ```
//!
//! with `g = c + Aᵀy` and prox center `x_c`. Diagonal `Q` is solved in closed
//! form; everything else goes through projected gradient with alternating
//! Barzilai–Borwein steps, stopped by the adaptive tolerance in
//! [`InnerTolerance`].

use crate::linalg::{dot, QuadOperator};
use crate::model::{project_box_in_place, Bounds};
use crate::Scalar;

pub const DEFAULT_INITIAL_TOL: f64 = 1e-2;
pub const DEFAULT_TOL_FLOOR: f64 = 1e-9;
pub const DEFAULT_TOL_SCALE: f64 = 5e-4;
pub const DEFAULT_MAX_INNER: usize = 200;

const BB_STEP_MIN: f64 = 1e-10;
const BB_STEP_MAX: f64 = 1e10;
const PRECISION_FACTOR: f64 = 64.0;

/// Inner-solve accuracy `ε_k`. `current` never increases and never drops
/// below `floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerTolerance<T> {
    pub current: T,
    pub floor: T,
    pub scale: T,
}

impl<T: Scalar> Default for InnerTolerance<T> {
    fn default() -> Self {
        InnerTolerance {
            current: T::lit(DEFAULT_INITIAL_TOL),
            floor: T::lit(DEFAULT_TOL_FLOOR),
            scale: T::lit(DEFAULT_TOL_SCALE),
        }
    }
}

impl<T: Scalar> InnerTolerance<T> {
    /// A tolerance that stays at `value` forever.
    pub fn fixed(value: T) -> Self {
        InnerTolerance {
            current: value,
            floor: value,
            scale: T::zero(),
        }
    }

    /// `ε ← min(ε, max(γ·ω·‖x_k − x_{k−1}‖ / τ, ε_min))`
    pub fn update(&self, omega: T, tau: T, primal_move: T) -> Self {
        let candidate = (self.scale * omega * primal_move / tau).max(self.floor);
        InnerTolerance {
            current: self.current.min(candidate),
            ..*self
        }
    }
}

/// Free-function form of [`InnerTolerance::update`].
pub fn update_tolerance<T: Scalar>(
    tol: InnerTolerance<T>,
    omega: T,
    tau: T,
    primal_move: T,
) -> InnerTolerance<T> {
    tol.update(omega, tau, primal_move)
}

/// One primal subproblem.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemSpec<'a, T> {
    pub quad: &'a QuadOperator<T>,
    /// `c + Aᵀy`
    pub linear: &'a [T],
    pub prox_center: &'a [T],
    pub tau: T,
    pub bounds: &'a Bounds<T>,
    /// Representative diagonal scale of `Q` for the first step; computed
    /// from `Q` when absent.
    pub curvature_hint: Option<T>,
}

impl<T: Scalar> SubproblemSpec<'_, T> {
    /// `φ(x)` given a precomputed `Qx`.
    fn objective_with(&self, x: &[T], qx: &[T]) -> T {
        let mut prox = T::zero();
        for (&xi, &ci) in x.iter().zip(self.prox_center) {
            prox += (xi - ci) * (xi - ci);
        }
        T::lit(0.5) * dot(x, qx) + dot(self.linear, x) + prox / (T::lit(2.0) * self.tau)
    }

    pub fn objective(&self, x: &[T]) -> T {
        let qx = self.quad.apply(x).expect("subproblem dimension");
        self.objective_with(x, &qx)
    }

    fn gradient_into(&self, x: &[T], qx: &[T], g: &mut [T]) {
        let inv_tau = self.tau.recip();
        for i in 0..x.len() {
            g[i] = qx[i] + self.linear[i] + (x[i] - self.prox_center[i]) * inv_tau;
        }
    }

    /// Natural residual `‖x − proj_X(x − ∇φ(x))‖₂`.
    pub fn natural_residual(&self, x: &[T]) -> T {
        let qx = self.quad.apply(x).expect("subproblem dimension");
        let mut g = vec![T::zero(); x.len()];
        self.gradient_into(x, &qx, &mut g);
        natural_residual_with(x, &g, self.bounds)
    }
}

fn natural_residual_with<T: Scalar>(x: &[T], g: &[T], bounds: &Bounds<T>) -> T {
    let mut acc = T::zero();
    for i in 0..x.len() {
        let p = (x[i] - g[i]).max(bounds.lower()[i]).min(bounds.upper()[i]);
        acc += (x[i] - p) * (x[i] - p);
    }
    acc.sqrt()
}

/// Result of an iterative inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution<T> {
    pub x: Vec<T>,
    pub residual: T,
    pub iters: usize,
}

/// Exact minimizer for diagonal `Q = diag(q)`:
/// `proj_X((x_c − τg) / (1 + τq))`, componentwise.
///
/// # Panics
/// If the operator is not [`QuadOperator::Diagonal`].
pub fn solve_diagonal<T: Scalar>(spec: &SubproblemSpec<'_, T>) -> Vec<T> {
    let mut x = vec![T::zero(); spec.prox_center.len()];
    solve_diagonal_into(spec, &mut x);
    x
}

pub fn solve_diagonal_into<T: Scalar>(spec: &SubproblemSpec<'_, T>, x: &mut [T]) {
    let QuadOperator::Diagonal(q) = spec.quad else {
        panic!("solve_diagonal requires a diagonal quadratic term");
    };
    let tau = spec.tau;
    let (lo, hi) = (spec.bounds.lower(), spec.bounds.upper());
    for i in 0..x.len() {
        let v = (spec.prox_center[i] - tau * spec.linear[i]) / (T::one() + tau * q[i]);
        x[i] = v.max(lo[i]).min(hi[i]);
    }
}

/// Projected gradient with alternating BB1/BB2 steps, warm-started at the
/// projection of the prox center.
///
/// Stops once the natural residual is at most `tol` (or at rounding level for
/// the magnitudes involved) or after `max_inner` steps. The returned point is
/// always inside the box. Without convergence it is the iterate with the
/// lowest objective seen.
pub fn solve_bb<T: Scalar>(spec: &SubproblemSpec<'_, T>, tol: T, max_inner: usize) -> InnerSolution<T> {
    let n = spec.prox_center.len();
    let tau = spec.tau;
    let step_min = T::lit(BB_STEP_MIN);
    let step_max = T::lit(BB_STEP_MAX);

    let mut x = spec.prox_center.to_vec();
    project_box_in_place(&mut x, spec.bounds);
    let mut qx = vec![T::zero(); n];
    spec.quad.apply_into(&x, &mut qx);
    let mut g = vec![T::zero(); n];
    spec.gradient_into(&x, &qx, &mut g);

    let mut residual = natural_residual_with(&x, &g, spec.bounds);
    // Rounding in x − proj(x − g) makes smaller residuals unreachable.
    let scale = x.iter().chain(&g).fold(T::one(), |m, v| m.max(v.abs()));
    let tol = tol.max(T::lit(PRECISION_FACTOR) * T::epsilon() * scale);
    if residual <= tol {
        return InnerSolution {
            x,
            residual,
            iters: 0,
        };
    }

    let curvature = spec.curvature_hint.unwrap_or_else(|| {
        spec.quad
            .diagonal()
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v))
    });
    let initial_step = tau / (T::one() + tau * curvature);
    let mut step = initial_step;

    let mut best_x = x.clone();
    let mut best_obj = spec.objective_with(&x, &qx);
    let mut best_residual = residual;
    let mut x_new = vec![T::zero(); n];
    let mut qx_new = vec![T::zero(); n];
    let mut g_new = vec![T::zero(); n];
    let mut iters = 0;
    while iters < max_inner {
        iters += 1;
        for i in 0..n {
            x_new[i] = x[i] - step * g[i];
        }
        project_box_in_place(&mut x_new, spec.bounds);
        spec.quad.apply_into(&x_new, &mut qx_new);
        spec.gradient_into(&x_new, &qx_new, &mut g_new);

        let (mut ss, mut sv, mut vv) = (T::zero(), T::zero(), T::zero());
        for i in 0..n {
            let s = x_new[i] - x[i];
            let v = g_new[i] - g[i];
            ss += s * s;
            sv += s * v;
            vv += v * v;
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut qx, &mut qx_new);
        std::mem::swap(&mut g, &mut g_new);

        residual = natural_residual_with(&x, &g, spec.bounds);
        if residual <= tol || ss.is_zero() {
            break;
        }
        let obj = spec.objective_with(&x, &qx);
        if obj < best_obj {
            best_obj = obj;
            best_residual = residual;
            best_x.copy_from_slice(&x);
        }
        step = if sv > T::zero() {
            let bb = if iters % 2 == 1 { ss / sv } else { sv / vv };
            bb.max(step_min).min(step_max)
        } else {
            initial_step
        };
    }

    if residual > tol && spec.objective_with(&x, &qx) > best_obj {
        return InnerSolution {
            x: best_x,
            residual: best_residual,
            iters,
        };
    }
    InnerSolution { x, residual, iters }
}

/// `‖x‖₂` of the change between two points, used as the primal movement.
pub fn primal_move<T: Scalar>(a: &[T], b: &[T]) -> T {
    crate::linalg::dist2(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const INF: f64 = f64::INFINITY;

    fn spec<'a>(
        quad: &'a QuadOperator<f64>,
        linear: &'a [f64],
        center: &'a [f64],
        tau: f64,
        bounds: &'a Bounds<f64>,
    ) -> SubproblemSpec<'a, f64> {
        SubproblemSpec {
            quad,
            linear,
            prox_center: center,
            tau,
            bounds,
            curvature_hint: None,
        }
    }

    #[test]
    fn diagonal_closed_form_examples() {
        let q = QuadOperator::Diagonal(vec![2.0]);
        let free = Bounds::free(1);
        let x = solve_diagonal(&spec(&q, &[-4.0], &[0.0], 1.0, &free));
        assert!((x[0] - 4.0 / 3.0).abs() < 1e-15);

        let boxed = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(solve_diagonal(&spec(&q, &[-4.0], &[0.0], 1.0, &boxed)), vec![1.0]);

        let zero = QuadOperator::Diagonal(vec![0.0, 0.0]);
        let free2 = Bounds::free(2);
        assert_eq!(
            solve_diagonal(&spec(&zero, &[0.0, 0.0], &[3.0, -1.5], 0.7, &free2)),
            vec![3.0, -1.5]
        );
    }

    #[test]
    #[should_panic(expected = "diagonal")]
    fn diagonal_solver_rejects_sparse() {
        let q = QuadOperator::Sparse(SymmetricMatrix::zeros(1));
        let b = Bounds::free(1);
        solve_diagonal(&spec(&q, &[0.0], &[0.0], 1.0, &b));
    }

    #[test]
    fn bb_agrees_with_closed_form() {
        let q = QuadOperator::Diagonal(vec![2.0]);
        let free = Bounds::free(1);
        let sol = solve_bb(&spec(&q, &[-4.0], &[0.0], 1.0, &free), 1e-9, 200);
        assert!((sol.x[0] - 4.0 / 3.0).abs() <= 1e-8);
        assert!(sol.residual <= 1e-9);
    }

    #[test]
    fn bb_at_stationary_point_stops_immediately() {
        // minimizer of ½x² − x + ½(x − 1)² is x = 1
        let q = QuadOperator::Sparse(SymmetricMatrix::from_triplets(1, &[(0, 0, 1.0)]).unwrap());
        let free = Bounds::free(1);
        let sol = solve_bb(&spec(&q, &[-1.0], &[1.0], 1.0, &free), 1e-12, 200);
        assert_eq!(sol.residual, 0.0);
        assert!(sol.iters <= 1);
        assert_eq!(sol.x, vec![1.0]);
    }

    #[test]
    fn bb_output_inside_box_even_from_outside_center() {
        let q = QuadOperator::Sparse(
            SymmetricMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap(),
        );
        let b = Bounds::new(vec![0.0, -1.0], vec![1.0, INF]).unwrap();
        let sol = solve_bb(&spec(&q, &[5.0, -3.0], &[-4.0, 9.0], 0.5, &b), 1e-10, 200);
        assert!(b.contains(&sol.x, 0.0));
    }

    #[test]
    fn tolerance_update_examples() {
        let tol: InnerTolerance<f64> = InnerTolerance {
            current: 1e-3,
            floor: 1e-9,
            scale: 5e-4,
        };
        assert!((tol.update(1.0, 1.0, 1.0).current - 5e-4).abs() < 1e-18);
        assert_eq!(tol.update(1.0, 1.0, 0.0).current, 1e-9);
        let tight = InnerTolerance { current: 1e-8, ..tol };
        assert_eq!(tight.update(1.0, 1.0, 20.0).current, 1e-8);
        let upd = update_tolerance(tol, 2.0, 0.5, 1e-2);
        assert!((upd.current - 5e-4 * 2.0 * 1e-2 / 0.5).abs() < 1e-18);
        assert_eq!(upd.floor, tol.floor);
        assert_eq!(upd.scale, tol.scale);
    }

    #[test]
    fn default_tolerance_constants() {
        let t = InnerTolerance::<f64>::default();
        assert_eq!((t.current, t.floor, t.scale), (1e-2, 1e-9, 5e-4));
    }

    fn random_psd(n: usize, rng: &mut impl Rng) -> QuadOperator<f64> {
        let l: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                q[i][j] = (0..n).map(|t| l[i][t] * l[j][t]).sum();
            }
        }
        QuadOperator::Sparse(SymmetricMatrix::from_dense_upper(&q).unwrap())
    }

    fn random_box(n: usize, rng: &mut impl Rng) -> Bounds<f64> {
        let (l, u) = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => (-INF, INF),
                1 => (rng.random_range(-2.0..0.0), INF),
                2 => (-INF, rng.random_range(0.0..2.0)),
                _ => {
                    let a = rng.random_range(-2.0..0.0);
                    (a, a + rng.random_range(0.1..3.0))
                }
            })
            .unzip();
        Bounds::new(l, u).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn closed_form_matches_bb_path(seed in any::<u64>(), n in 1usize..50) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let q: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..5.0) }).collect();
            let quad = QuadOperator::Diagonal(q);
            let lin: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tau = rng.random_range(0.05..5.0);
            let b = random_box(n, &mut rng);
            let s = spec(&quad, &lin, &center, tau, &b);
            let exact = solve_diagonal(&s);
            let iter = solve_bb(&s, 1e-12, 10_000);
            let diff = exact.iter().zip(&iter.x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(diff <= 1e-9, "diff {diff}");
        }

        #[test]
        fn bb_never_worse_than_start_and_feasible(seed in any::<u64>(), n in 1usize..12) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let quad = random_psd(n, &mut rng);
            let lin: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tau = rng.random_range(0.01..100.0);
            let b = random_box(n, &mut rng);
            let s = spec(&quad, &lin, &center, tau, &b);
            let mut start = center.clone();
            project_box_in_place(&mut start, &b);
            let sol = solve_bb(&s, 1e-8, rng.random_range(1..50));
            prop_assert!(b.contains(&sol.x, 0.0));
            prop_assert!(s.objective(&sol.x) <= s.objective(&start) + 1e-12);
        }

        #[test]
        fn tolerance_sequence_monotone_with_floor(
            moves in proptest::collection::vec((0.0f64..1e3, 1e-3f64..1e3, 1e-3f64..1e3), 1..100)
        ) {
            let mut tol = InnerTolerance::<f64>::default();
            for (mv, omega, tau) in moves {
                let next = tol.update(omega, tau, mv);
                prop_assert!(next.current <= tol.current);
                prop_assert!(next.current >= next.floor);
                tol = next;
            }
        }
    }
}
