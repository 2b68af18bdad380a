use halqp::engine::PidGains;
use halqp::{
    solve, solve_with_progress, Bounds, CertificateKind, CsrMatrix, Params, Params32, Problem, Problem32,
    QuadOperator, SolverParams, Status, SymmetricMatrix,
};

/// `min x² + y² − 2x − 4y` s.t. `x + y ≤ 1`, `x, y ≥ 0`; optimum `(0, 1)`.
fn simplex_qp() -> Problem {
    Problem::new(
        QuadOperator::Diagonal(vec![2.0, 2.0]),
        vec![-2.0, -4.0],
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
        Bounds::nonneg(2),
        Bounds::new(vec![f64::NEG_INFINITY], vec![1.0]).unwrap(),
    )
    .unwrap()
}

#[test]
fn small_qp_reaches_the_known_optimum() {
    let r = solve(&simplex_qp(), &Params::with_tol(1e-9)).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.x[0]).abs() < 1e-7 && (r.x[1] - 1.0).abs() < 1e-7, "{:?}", r.x);
    assert!((r.report.primal_obj + 3.0).abs() < 1e-7);
    // the row multiplier balances the gradient 2y − 4 = −2 at y = 1
    assert!((r.y[0] - 2.0).abs() < 1e-6, "{:?}", r.y);
}

#[test]
fn sparse_and_low_rank_forms_agree() {
    // Q = [[2, 1], [1, 2]] as a sparse matrix and as I + rrᵀ with r = (1, 1)
    let sparse = QuadOperator::Sparse(SymmetricMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap());
    let low_rank = QuadOperator::low_rank(
        SymmetricMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap(),
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
    )
    .unwrap();
    let mut objectives = Vec::new();
    for quad in [sparse, low_rank] {
        let p = Problem { quad, ..simplex_qp() };
        let r = solve(&p, &Params::with_tol(1e-9)).unwrap();
        assert_eq!(r.status, Status::Optimal);
        objectives.push(r.report.primal_obj);
    }
    assert!((objectives[0] - objectives[1]).abs() < 1e-7, "{objectives:?}");
}

#[test]
fn single_precision_solve() {
    let p = Problem32::new(
        QuadOperator::Diagonal(vec![2.0f32, 2.0]),
        vec![-2.0, -4.0],
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0f32), (0, 1, 1.0)]).unwrap(),
        Bounds::nonneg(2),
        Bounds::new(vec![f32::NEG_INFINITY], vec![1.0]).unwrap(),
    )
    .unwrap();
    let r = solve(&p, &Params32::with_tol(1e-4)).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
}

#[test]
fn infeasible_rows_give_a_farkas_ray() {
    // x + y ≥ 3 with x, y ∈ [0, 1]
    let p = Problem::new(
        QuadOperator::zero(2),
        vec![1.0, 1.0],
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
        Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
        Bounds::new(vec![3.0], vec![f64::INFINITY]).unwrap(),
    )
    .unwrap();
    let r = solve(&p, &Params::default()).unwrap();
    assert_eq!(r.status, Status::PrimalInfeasible);
    let cert = r.certificate.unwrap();
    assert!(matches!(cert.kind, CertificateKind::PrimalRay(_)));
    // a lower row bound carries a nonpositive multiplier
    assert!(cert.ray()[0] < 0.0);
}

#[test]
fn unbounded_direction_is_certified() {
    // min −x with only x ≥ 0
    let p = Problem::new(
        QuadOperator::zero(1),
        vec![-1.0],
        CsrMatrix::zeros(0, 1),
        Bounds::nonneg(1),
        Bounds::free(0),
    )
    .unwrap();
    let r = solve(&p, &Params::default()).unwrap();
    assert_eq!(r.status, Status::DualInfeasible);
    assert_eq!(r.certificate.unwrap().ray(), &[1.0]);
}

#[test]
fn limits_are_reported() {
    let p = simplex_qp();
    let r = solve(&p, &SolverParams { iter_limit: 3, eps_tol: 1e-12, ..Params::default() }).unwrap();
    assert_eq!(r.status, Status::IterationLimit);
    assert_eq!(r.outer_iterations, 3);
    let r = solve(
        &p,
        &SolverParams { time_limit: Some(std::time::Duration::ZERO), ..Params::default() },
    )
    .unwrap();
    assert_eq!(r.status, Status::TimeLimit);
}

#[test]
fn progress_reports_every_check() {
    let mut seen = Vec::new();
    let params = SolverParams { eps_tol: 1e-10, ..Params::default() };
    let r = solve_with_progress(&simplex_qp(), &params, |pr| {
        seen.push((pr.iteration, pr.round, pr.omega, pr.report.max()));
    })
    .unwrap();
    assert!(!seen.is_empty());
    assert!(seen.iter().all(|s| s.0 % params.check_every == 0 && s.2 > 0.0));
    assert_eq!(seen.last().unwrap().0, r.outer_iterations);
    assert!(seen.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn invalid_parameters_are_rejected() {
    let p = simplex_qp();
    for bad in [
        SolverParams { eps_tol: 0.0, ..Params::default() },
        SolverParams { theta: 1.5, ..Params::default() },
        SolverParams { omega0: -1.0, ..Params::default() },
        SolverParams { pid: PidGains::new(0.5, 0.02, 0.1).with_max_step(0.0), ..Params::default() },
    ] {
        assert!(matches!(solve(&p, &bad), Err(halqp::Error::InvalidParams(_))));
    }
}

#[test]
fn malformed_problems_are_rejected() {
    let mut p = simplex_qp();
    p.cost.push(1.0);
    assert!(matches!(solve(&p, &Params::default()), Err(halqp::Error::InvalidProblem(_))));
    let inverted = Problem {
        var_bounds: Bounds::new_unchecked(vec![1.0, 0.0], vec![0.0, 1.0]),
        ..simplex_qp()
    };
    assert!(solve(&inverted, &Params::default()).is_err());
}
