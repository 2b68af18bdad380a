//! Benchmark harness: parallel solves, run records and the shifted geometric
//! mean of runtimes.

use std::fmt::Write as _;

use halqp::{QpProblem, SolverParams, Status};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shift used by [`sgm10`].
pub const SGM_SHIFT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("no runtimes given")]
    EmptyInput,
    #[error("{times} runtimes but {mask} solved flags")]
    LengthMismatch { times: usize, mask: usize },
    #[error("runtime {0} is negative or not finite")]
    BadTime(f64),
}

/// `exp(mean(ln(tᵢ + 10))) − 10`, with unsolved runs charged `limit`.
pub fn sgm10(times: &[f64], limit: f64, solved: &[bool]) -> Result<f64, MetricError> {
    if times.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if times.len() != solved.len() {
        return Err(MetricError::LengthMismatch {
            times: times.len(),
            mask: solved.len(),
        });
    }
    // The product is kept as `prod · 2^(SCALE_BITS·scaled)`; rescaling by a
    // power of two is exact, and a single root is more accurate than exp∘ln.
    const SCALE_BITS: i32 = 512;
    let (mut prod, mut scaled) = (1.0f64, 0i32);
    for (&t, &ok) in times.iter().zip(solved) {
        let t = if ok { t } else { limit };
        if !(t >= 0.0 && t.is_finite()) {
            return Err(MetricError::BadTime(t));
        }
        prod *= t + SGM_SHIFT;
        if prod > 2f64.powi(SCALE_BITS) {
            prod *= 2f64.powi(-SCALE_BITS);
            scaled += 1;
        }
    }
    let n = times.len() as f64;
    let root = prod.powf(1.0 / n) * 2f64.powf(f64::from(SCALE_BITS * scaled) / n);
    Ok(root - SGM_SHIFT)
}

fn status_name<S: serde::Serializer>(status: &Option<Status>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(status.map_or("error", Status::as_str))
}

/// Outcome of one benchmark solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    /// `None` when the instance could not be loaded or set up.
    #[serde(serialize_with = "status_name")]
    pub status: Option<Status>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub seconds: f64,
    pub r_primal: f64,
    pub r_dual: f64,
    pub r_gap: f64,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status.is_some_and(Status::is_solved)
    }

    fn failed(instance: &str, error: String) -> Self {
        RunRecord {
            instance: instance.to_string(),
            status: None,
            outer_iterations: 0,
            inner_iterations: 0,
            seconds: 0.0,
            r_primal: f64::NAN,
            r_dual: f64::NAN,
            r_gap: f64::NAN,
            objective: f64::NAN,
            error: Some(error),
        }
    }
}

/// Something the harness can solve: a name plus a loader that is run on the
/// worker thread.
pub struct BenchInstance<'a> {
    pub name: String,
    pub load: Box<dyn Fn() -> Result<QpProblem<f64>, String> + Send + Sync + 'a>,
}

impl<'a> BenchInstance<'a> {
    pub fn new(name: impl Into<String>, load: impl Fn() -> Result<QpProblem<f64>, String> + Send + Sync + 'a) -> Self {
        BenchInstance {
            name: name.into(),
            load: Box::new(load),
        }
    }

    pub fn from_problem(name: impl Into<String>, p: QpProblem<f64>) -> Self {
        BenchInstance::new(name, move || Ok(p.clone()))
    }
}

pub fn run_one(name: &str, p: &QpProblem<f64>, params: &SolverParams<f64>) -> RunRecord {
    match halqp::solve(p, params) {
        Ok(r) => RunRecord {
            instance: name.to_string(),
            status: Some(r.status),
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            seconds: r.seconds,
            r_primal: r.report.r_primal,
            r_dual: r.report.r_dual,
            r_gap: r.report.r_gap,
            objective: r.report.primal_obj + p.objective_offset,
            error: None,
        },
        Err(e) => RunRecord::failed(name, e.to_string()),
    }
}

/// Solves every instance, using up to `jobs` threads (`0` lets rayon pick).
/// Records come back sorted by instance name.
pub fn run_bench(instances: &[BenchInstance<'_>], params: &SolverParams<f64>, jobs: usize) -> Vec<RunRecord> {
    let work = || -> Vec<RunRecord> {
        instances
            .par_iter()
            .map(|inst| match (inst.load)() {
                Ok(p) => run_one(&inst.name, &p, params),
                Err(e) => RunRecord::failed(&inst.name, e),
            })
            .collect()
    };
    let mut records = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    records.sort_by(|a, b| a.instance.cmp(&b.instance));
    records
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub count: usize,
    pub solved: usize,
    pub failed: usize,
    /// Shifted geometric mean of runtimes; `None` for an empty run.
    pub sgm10_seconds: Option<f64>,
    pub time_limit: f64,
}

/// Totals over `records`; unsolved runs are charged `time_limit` seconds.
pub fn summarize(records: &[RunRecord], time_limit: f64) -> BenchSummary {
    let solved = records.iter().filter(|r| r.solved()).count();
    let times: Vec<f64> = records.iter().map(|r| r.seconds).collect();
    let mask: Vec<bool> = records.iter().map(RunRecord::solved).collect();
    BenchSummary {
        count: records.len(),
        solved,
        failed: records.len() - solved,
        sgm10_seconds: sgm10(&times, time_limit, &mask).ok(),
        time_limit,
    }
}

/// Plain-text table of the records followed by the summary line.
pub fn format_table(records: &[RunRecord], summary: &BenchSummary) -> String {
    let width = records.iter().map(|r| r.instance.len()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<17}  {:>9}  {:>10}  {:>9}  {:>9}  {:>9}  {:>16}",
        "instance", "status", "outer", "inner", "seconds", "r_primal", "r_dual", "objective"
    );
    for r in records {
        let status = match (&r.status, &r.error) {
            (Some(s), _) => s.as_str().to_string(),
            (None, Some(_)) => "error".to_string(),
            (None, None) => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:<17}  {:>9}  {:>10}  {:>9.3}  {:>9.2e}  {:>9.2e}  {:>16.9e}",
            r.instance, status, r.outer_iterations, r.inner_iterations, r.seconds, r.r_primal, r.r_dual, r.objective
        );
    }
    let sgm = summary.sgm10_seconds.map_or("-".to_string(), |s| format!("{s:.4}"));
    let _ = writeln!(
        out,
        "solved {}/{} (failed {}), SGM10 {} s (limit {} s)",
        summary.solved, summary.count, summary.failed, sgm, summary.time_limit
    );
    out
}
