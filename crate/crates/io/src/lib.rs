//! Instance formats, generators, the benchmark harness and the command-line
//! front end of the `halqp` solver.

pub mod bench;
pub mod cli;
pub mod generate;
pub mod json;
pub mod qps;

pub use bench::{run_bench, sgm10, summarize, BenchInstance, BenchSummary, RunRecord};
pub use json::{ProblemJson, ResultJson};
pub use qps::{parse_qps, parse_qps_document, write_qps, ParseError, QpsDocument};
