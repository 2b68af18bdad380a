use halqp::SolverParams;
use halqp_io::bench::{run_bench, summarize, BenchInstance};
use halqp_io::generate::{random_dual_infeasible, random_qp, QStructure};

#[test]
fn totals_and_ordering() {
    let mut instances = vec![
        BenchInstance::new("broken", || Err("no such file".to_string())),
        BenchInstance::from_problem("unbounded", random_dual_infeasible(6, 3, QStructure::Diagonal, 0.5, 1)),
    ];
    for seed in 0..4 {
        instances.push(BenchInstance::from_problem(
            format!("qp{seed}"),
            random_qp(8, 4, QStructure::Sparse, 0.4, seed),
        ));
    }
    let mut params = SolverParams::with_tol(1e-6);
    params.iter_limit = 200_000;
    let records = run_bench(&instances, &params, 2);
    let names: Vec<&str> = records.iter().map(|r| r.instance.as_str()).collect();
    assert_eq!(names, ["broken", "qp0", "qp1", "qp2", "qp3", "unbounded"]);
    assert!(records[0].error.is_some() && !records[0].solved());
    assert!(records[1..].iter().all(|r| r.solved() && r.seconds >= 0.0));

    let summary = summarize(&records, 100.0);
    assert_eq!(summary.count, 6);
    assert_eq!(summary.solved + summary.failed, summary.count);
    assert_eq!(summary.failed, 1);
    assert!(summary.sgm10_seconds.unwrap() > 0.0);

    // same records whatever the thread count
    let serial = run_bench(&instances, &params, 1);
    let strip = |rs: &[halqp_io::RunRecord]| -> Vec<_> {
        rs.iter().map(|r| (r.instance.clone(), r.status, r.outer_iterations)).collect()
    };
    assert_eq!(strip(&serial), strip(&records));
}
