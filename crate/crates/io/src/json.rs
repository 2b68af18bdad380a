//! Native JSON encodings of problems and solve results.
//!
//! Infinite bounds are written as `null`; which side is meant follows from
//! the field (`*_lower` or `*_upper`).

use halqp::{Bounds, CertificateKind, CsrMatrix, QpProblem, QuadOperator, SolveResult, SymmetricMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid problem: {0}")]
    Invalid(#[from] halqp::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseJson {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)`
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseJson {
    fn from_csr(a: &CsrMatrix<f64>) -> Self {
        SparseJson {
            rows: a.rows(),
            cols: a.cols(),
            entries: a.triplets().collect(),
        }
    }

    fn to_csr(&self) -> Result<CsrMatrix<f64>, halqp::Error> {
        CsrMatrix::from_triplets(self.rows, self.cols, &self.entries)
    }
}

/// `Q` in one of the solver's structured forms. Symmetric matrices list
/// their upper triangle only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadJson {
    Diagonal { values: Vec<f64> },
    Sparse { upper: Vec<(usize, usize, f64)> },
    LowRank { upper: Vec<(usize, usize, f64)>, factor: SparseJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub quad: QuadJson,
    pub cost: Vec<f64>,
    pub constraint_matrix: SparseJson,
    pub var_lower: Vec<Option<f64>>,
    pub var_upper: Vec<Option<f64>>,
    pub con_lower: Vec<Option<f64>>,
    pub con_upper: Vec<Option<f64>>,
    #[serde(default)]
    pub objective_offset: f64,
}

fn finite_or_null(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| x.is_finite().then_some(x)).collect()
}

fn null_to(v: &[Option<f64>], infinity: f64) -> Vec<f64> {
    v.iter().map(|x| x.unwrap_or(infinity)).collect()
}

fn bounds(lower: &[Option<f64>], upper: &[Option<f64>]) -> Result<Bounds<f64>, halqp::Error> {
    Bounds::new(null_to(lower, f64::NEG_INFINITY), null_to(upper, f64::INFINITY))
}

fn upper_triplets(s: &SymmetricMatrix<f64>) -> Vec<(usize, usize, f64)> {
    s.upper().triplets().collect()
}

impl ProblemJson {
    pub fn from_problem(p: &QpProblem<f64>) -> Self {
        let quad = match &p.quad {
            QuadOperator::Diagonal(d) => QuadJson::Diagonal { values: d.clone() },
            QuadOperator::Sparse(s) => QuadJson::Sparse { upper: upper_triplets(s) },
            QuadOperator::SparseLowRank { p, r } => QuadJson::LowRank {
                upper: upper_triplets(p),
                factor: SparseJson::from_csr(r),
            },
        };
        ProblemJson {
            quad,
            cost: p.cost.clone(),
            constraint_matrix: SparseJson::from_csr(&p.constraint_matrix),
            var_lower: finite_or_null(p.var_bounds.lower()),
            var_upper: finite_or_null(p.var_bounds.upper()),
            con_lower: finite_or_null(p.con_bounds.lower()),
            con_upper: finite_or_null(p.con_bounds.upper()),
            objective_offset: p.objective_offset,
        }
    }

    pub fn to_problem(&self) -> Result<QpProblem<f64>, halqp::Error> {
        let n = self.cost.len();
        let quad = match &self.quad {
            QuadJson::Diagonal { values } => QuadOperator::Diagonal(values.clone()),
            QuadJson::Sparse { upper } => QuadOperator::Sparse(SymmetricMatrix::from_triplets(n, upper)?),
            QuadJson::LowRank { upper, factor } => {
                QuadOperator::low_rank(SymmetricMatrix::from_triplets(n, upper)?, factor.to_csr()?)?
            }
        };
        let mut p = QpProblem::new(
            quad,
            self.cost.clone(),
            self.constraint_matrix.to_csr()?,
            bounds(&self.var_lower, &self.var_upper)?,
            bounds(&self.con_lower, &self.con_upper)?,
        )?;
        if !self.objective_offset.is_finite() {
            return Err(halqp::Error::NonFiniteData { context: "objective offset", index: 0 });
        }
        p.objective_offset = self.objective_offset;
        Ok(p)
    }
}

pub fn parse_problem_json(text: &str) -> Result<QpProblem<f64>, JsonError> {
    let doc: ProblemJson = serde_json::from_str(text)?;
    Ok(doc.to_problem()?)
}

pub fn write_problem_json(p: &QpProblem<f64>) -> String {
    serde_json::to_string_pretty(&ProblemJson::from_problem(p)).expect("problem serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    /// `primal_ray` (Farkas ray on the duals) or `dual_ray` (recession direction).
    pub kind: String,
    pub ray: Vec<f64>,
    pub violation: f64,
    pub improvement: f64,
}

/// The result document written by `solve` and collected by `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub instance: String,
    pub status: String,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub r_primal: f64,
    pub r_dual: f64,
    pub r_gap: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub restarts: usize,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

impl ResultJson {
    /// Objectives include the problem's constant offset. `with_iterates`
    /// also stores `x` and `y`.
    pub fn from_result(instance: &str, p: &QpProblem<f64>, r: &SolveResult<f64>, with_iterates: bool) -> Self {
        let certificate = r.certificate.as_ref().map(|c| CertificateJson {
            kind: match c.kind {
                CertificateKind::PrimalRay(_) => "primal_ray",
                CertificateKind::DualRay(_) => "dual_ray",
            }
            .to_string(),
            ray: c.ray().to_vec(),
            violation: c.violation,
            improvement: c.improvement,
        });
        ResultJson {
            instance: instance.to_string(),
            status: r.status.as_str().to_string(),
            primal_objective: r.report.primal_obj + p.objective_offset,
            dual_objective: r.report.dual_obj + p.objective_offset,
            r_primal: r.report.r_primal,
            r_dual: r.report.r_dual,
            r_gap: r.report.r_gap,
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            restarts: r.restarts,
            seconds: r.seconds,
            certificate,
            x: with_iterates.then(|| r.x.clone()),
            y: with_iterates.then(|| r.y.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> QpProblem<f64> {
        let q = SymmetricMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0)]).unwrap();
        let r = CsrMatrix::from_triplets(1, 2, &[(0, 1, 3.0)]).unwrap();
        let a = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
        let mut p = QpProblem::new(
            QuadOperator::low_rank(q, r).unwrap(),
            vec![1.0, -1.0],
            a,
            Bounds::new(vec![0.0, f64::NEG_INFINITY], vec![f64::INFINITY, 4.0]).unwrap(),
            Bounds::new(vec![f64::NEG_INFINITY], vec![2.0]).unwrap(),
        )
        .unwrap();
        p.objective_offset = 0.5;
        p
    }

    #[test]
    fn problem_round_trip() {
        let p = sample();
        let text = write_problem_json(&p);
        assert!(text.contains("null"));
        assert_eq!(parse_problem_json(&text).unwrap(), p);
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(matches!(parse_problem_json("{"), Err(JsonError::Syntax(_))));
        let mut doc = ProblemJson::from_problem(&sample());
        doc.cost.push(0.0);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(matches!(parse_problem_json(&text), Err(JsonError::Invalid(_))));
    }
}
