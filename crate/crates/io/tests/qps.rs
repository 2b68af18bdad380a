use halqp::{QpProblem, QuadOperator};
use halqp_io::generate::{
    make_lasso_qp, random_dual_infeasible, random_lasso_data, random_primal_infeasible, random_qp, QStructure,
};
use halqp_io::json::{parse_problem_json, write_problem_json};
use halqp_io::qps::{parse_qps, parse_qps_document, write_qps, ParseError};

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-14 * a.abs().max(b.abs())
}

fn assert_equivalent(a: &QpProblem<f64>, b: &QpProblem<f64>, label: &str) {
    assert_eq!((a.num_vars(), a.num_rows()), (b.num_vars(), b.num_rows()), "{label}: dims");
    assert_eq!(a.cost, b.cost, "{label}: cost");
    let (mut ta, mut tb): (Vec<_>, Vec<_>) = (
        a.constraint_matrix.triplets().collect(),
        b.constraint_matrix.triplets().collect(),
    );
    ta.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    tb.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    assert_eq!(ta, tb, "{label}: constraint matrix");
    for (x, y) in [(&a.var_bounds, &b.var_bounds), (&a.con_bounds, &b.con_bounds)] {
        for (u, v) in x.lower().iter().zip(y.lower()).chain(x.upper().iter().zip(y.upper())) {
            assert!(close(*u, *v), "{label}: bound {u} vs {v}");
        }
    }
    let (qa, qb) = (a.quad.to_dense(), b.quad.to_dense());
    for (ra, rb) in qa.iter().zip(&qb) {
        for (u, v) in ra.iter().zip(rb) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{label}: Q entry {u} vs {v}");
        }
    }
    assert!(close(a.objective_offset, b.objective_offset), "{label}: offset");
}

fn corpus() -> Vec<(String, QpProblem<f64>)> {
    let structures = [QStructure::Diagonal, QStructure::Sparse, QStructure::LowRank];
    (0..50u64)
        .map(|i| {
            let s = structures[i as usize % 3];
            let (n, m) = (3 + (i as usize * 7) % 20, 1 + (i as usize * 3) % 9);
            let mut p = match i % 5 {
                0 | 1 => random_qp(n, m, s, 0.4, i),
                2 => random_primal_infeasible(n, m, s, 0.4, i),
                3 => random_dual_infeasible(n, m, s, 0.4, i),
                _ => {
                    let (a, b) = random_lasso_data(m + 2, n, 0.5, i);
                    make_lasso_qp(&a, &b, 0.0).unwrap()
                }
            };
            if i % 4 == 0 {
                p.objective_offset = 0.25 * i as f64 - 3.0;
            }
            (format!("seed{i}"), p)
        })
        .collect()
}

#[test]
fn qps_round_trip_on_generated_instances() {
    for (name, p) in corpus() {
        let text = write_qps(&p, &name);
        let doc = parse_qps_document(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.name, name);
        assert_equivalent(&p, &doc.problem, &name);
        // a second pass is stable
        let again = parse_qps(&write_qps(&doc.problem, &name)).unwrap();
        assert_equivalent(&doc.problem, &again, &name);
    }
}

#[test]
fn json_round_trip_on_generated_instances() {
    for (name, p) in corpus() {
        let back = parse_problem_json(&write_problem_json(&p)).unwrap();
        assert_eq!(back, p, "{name}");
    }
}

#[test]
fn minimal_document() {
    let text = "NAME min\nROWS\n N obj\nCOLUMNS\n    x1 obj 1\nRHS\nQUADOBJ\n    x1 x1 2\nENDATA\n";
    let p = parse_qps(text).unwrap();
    assert_eq!(p.num_vars(), 1);
    assert_eq!(p.num_rows(), 0);
    assert_eq!(p.quad, QuadOperator::Diagonal(vec![2.0]));
    assert_eq!(p.cost, vec![1.0]);
}

#[test]
fn integer_marker_is_unsupported() {
    let text = "\
NAME mip
ROWS
 N obj
 G c
COLUMNS
    M1 'MARKER' 'INTORG'
    x obj 1 c 1
    M2 'MARKER' 'INTEND'
RHS
    rhs c 1
ENDATA
";
    match parse_qps(text) {
        Err(ParseError::UnsupportedSection { line, what }) => {
            assert_eq!(line, 6);
            assert_eq!(what, "INTORG");
        }
        other => panic!("expected UnsupportedSection, got {other:?}"),
    }
}

#[test]
fn integer_bounds_are_unsupported() {
    let text = "NAME b\nROWS\n N obj\nCOLUMNS\n x obj 1\nBOUNDS\n BV bnd x\nENDATA\n";
    assert!(matches!(parse_qps(text), Err(ParseError::UnsupportedSection { line: 7, .. })));
}

#[test]
fn fixed_layout_and_large_values() {
    // fixed columns, a set name on every line, and 1e30 standing for infinity
    let text = "\
NAME          FIXED
ROWS
 N  COST
 L  LIM1
COLUMNS
    X1        COST         1.0   LIM1         1.0
    X2        COST         2.0   LIM1         1.0
RHS
    RHS1      LIM1         4.0
BOUNDS
 UP BND1      X1           1e30
 LO BND1      X2          -1e30
 UP BND1      X2           3.0
ENDATA
";
    let p = parse_qps(text).unwrap();
    assert_eq!(p.var_bounds.upper(), &[f64::INFINITY, 3.0]);
    assert_eq!(p.var_bounds.lower(), &[0.0, f64::NEG_INFINITY]);
    assert_eq!(p.con_bounds.upper(), &[4.0]);
    assert!(p.quad.is_zero());
}
