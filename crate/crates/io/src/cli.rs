//! The `halqp` command line: `solve`, `bench` and `gen`.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use halqp::engine::{PidGains, RestartParams};
use halqp::{QpProblem, SolverParams, Status};

use crate::bench::{format_table, run_bench, summarize, BenchInstance};
use crate::generate::{self, QStructure};
use crate::json::{parse_problem_json, write_problem_json, ResultJson};
use crate::qps::{parse_qps_document, write_qps};

pub const EXIT_OPTIMAL: i32 = 0;
pub const EXIT_PRIMAL_INFEASIBLE: i32 = 2;
pub const EXIT_DUAL_INFEASIBLE: i32 = 3;
pub const EXIT_ITERATION_LIMIT: i32 = 4;
pub const EXIT_TIME_LIMIT: i32 = 5;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;
/// Input file missing or unreadable.
pub const EXIT_NO_INPUT: i32 = 66;
/// Output could not be written.
pub const EXIT_IO: i32 = 74;

/// Per-instance limit of `bench` when `--time-limit` is not given, in seconds.
pub const DEFAULT_BENCH_TIME_LIMIT: f64 = 3600.0;

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Optimal => EXIT_OPTIMAL,
        Status::PrimalInfeasible => EXIT_PRIMAL_INFEASIBLE,
        Status::DualInfeasible => EXIT_DUAL_INFEASIBLE,
        Status::IterationLimit => EXIT_ITERATION_LIMIT,
        Status::TimeLimit => EXIT_TIME_LIMIT,
    }
}

#[derive(Parser, Debug)]
#[command(name = "halqp", version, about = "Convex QP solver (restarted Halpern PDHG)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and write a JSON result document.
    Solve(SolveArgs),
    /// Solve every instance in a directory and report SGM10. Without
    /// `--time-limit` each solve gets one hour.
    Bench(BenchArgs),
    /// Write a generated instance.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Qps,
    Json,
}

#[derive(Args, Debug, Clone)]
struct SolverFlags {
    /// Relative KKT tolerance.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    tol: f64,
    /// Tolerance of the infeasibility certificates.
    #[arg(long, value_parser = positive)]
    inf_tol: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long, value_parser = positive)]
    time_limit: Option<f64>,
    #[arg(long)]
    iter_limit: Option<usize>,
    /// Over-relaxation weight of the Halpern step, in [0, 1].
    #[arg(long)]
    theta: Option<f64>,
    /// PID gains for the primal weight, as KP,KI,KD.
    #[arg(long, value_parser = pid_gains)]
    pid: Option<PidGains<f64>>,
    /// Initial primal weight.
    #[arg(long, value_parser = positive)]
    omega0: Option<f64>,
    /// Longest restart round; 0 turns restarts off.
    #[arg(long)]
    restart_len: Option<usize>,
    /// Seed of the operator-norm estimate.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    solver: SolverFlags,
    /// CSV of the residuals at every certification point.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Result document path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory of `.qps`/`.mps`/`.json` instances.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// JSON file receiving the records and the summary.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Qp,
    PrimalInfeasible,
    DualInfeasible,
    Lasso,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Structure {
    Diagonal,
    Sparse,
    LowRank,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Qp)]
    kind: GenKind,
    /// Variables (Lasso: columns of A).
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Constraint rows (Lasso: rows of A).
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Structure::Sparse)]
    structure: Structure,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    /// Lasso weight; 0 selects 0.01·‖Aᵀb‖∞.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Qps)]
    format: Format,
    /// Destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive finite number, got {s}"))
    }
}

fn pid_gains(s: &str) -> Result<PidGains<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [kp, ki, kd] = parts.as_slice() else {
        return Err("expected three comma-separated gains KP,KI,KD".into());
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok(PidGains::new(num(kp)?, num(ki)?, num(kd)?))
}

/// A failure with its exit code; the message goes to standard error.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl SolverFlags {
    fn params(&self) -> Result<SolverParams<f64>, Failure> {
        let mut params = SolverParams::with_tol(self.tol);
        if let Some(v) = self.inf_tol {
            params.eps_inf = v;
        }
        if let Some(v) = self.time_limit {
            params.time_limit = Some(Duration::from_secs_f64(v));
        }
        if let Some(v) = self.iter_limit {
            params.iter_limit = v;
        }
        if let Some(v) = self.theta {
            params.theta = v;
        }
        if let Some(v) = self.pid {
            params.pid = v;
        }
        if let Some(v) = self.omega0 {
            params.omega0 = v;
        }
        match self.restart_len {
            Some(0) => params.restart = None,
            Some(len) => {
                params.restart = Some(RestartParams {
                    max_round_len: len,
                    ..RestartParams::default()
                })
            }
            None => {}
        }
        if let Some(v) = self.seed {
            params.norm_seed = v;
        }
        params
            .validate()
            .map_err(|e| Failure::new(EXIT_USAGE, format!("invalid solver options: {e}")))?;
        Ok(params)
    }
}

fn infer_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Qps,
    })
}

fn load(path: &Path, format: Format) -> Result<QpProblem<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_NO_INPUT, format!("cannot read {}: {e}", path.display())))?;
    let parsed = match format {
        Format::Qps => parse_qps_document(&text).map(|d| d.problem).map_err(|e| e.to_string()),
        Format::Json => parse_problem_json(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match path {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| Failure::new(EXIT_IO, format!("cannot write output: {e}")))
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn solve(args: &SolveArgs) -> Result<i32, Failure> {
    let params = args.solver.params()?;
    let problem = load(&args.input, infer_format(&args.input, args.format))?;
    let mut trace = String::from("iteration,r_primal,r_dual,r_gap,omega,round\n");
    let record = args.trace.is_some();
    let result = halqp::solve_with_progress(&problem, &params, |pr| {
        if record {
            let r = pr.report;
            trace.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{}\n",
                pr.iteration, r.r_primal, r.r_dual, r.r_gap, pr.omega, pr.round
            ));
        }
    })
    .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot set up solver: {e}")))?;
    if let Some(path) = &args.trace {
        write_out(Some(path), &trace)?;
    }
    let doc = ResultJson::from_result(&instance_name(&args.input), &problem, &result, true);
    let text = serde_json::to_string_pretty(&doc).expect("result serializes") + "\n";
    write_out(args.output.as_deref(), &text)?;
    Ok(exit_code(result.status))
}

fn bench(args: &BenchArgs) -> Result<i32, Failure> {
    let params = args.solver.params()?;
    let entries = fs::read_dir(&args.dir)
        .map_err(|e| Failure::new(EXIT_NO_INPUT, format!("cannot read {}: {e}", args.dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| ["qps", "mps", "json"].iter().any(|k| e.eq_ignore_ascii_case(k)))
        })
        .collect();
    paths.sort();
    let instances: Vec<BenchInstance<'_>> = paths
        .iter()
        .map(|path| {
            let format = infer_format(path, args.format);
            BenchInstance::new(instance_name(path), move || load(path, format).map_err(|f| f.message))
        })
        .collect();
    let mut params = params;
    let limit = args.solver.time_limit.unwrap_or(DEFAULT_BENCH_TIME_LIMIT);
    params.time_limit = Some(Duration::from_secs_f64(limit));
    let records = run_bench(&instances, &params, args.jobs);
    let summary = summarize(&records, limit);
    print!("{}", format_table(&records, &summary));
    if let Some(path) = &args.output {
        let doc = serde_json::json!({ "records": records, "summary": summary });
        let text = serde_json::to_string_pretty(&doc).expect("records serialize") + "\n";
        write_out(Some(path), &text)?;
    }
    Ok(EXIT_OPTIMAL)
}

fn gen(args: &GenArgs) -> Result<i32, Failure> {
    if args.n == 0 || args.m == 0 {
        return Err(Failure::new(EXIT_USAGE, "--n and --m must be at least 1"));
    }
    if !(args.density > 0.0 && args.density <= 1.0) {
        return Err(Failure::new(EXIT_USAGE, "--density must lie in (0, 1]"));
    }
    let structure = match args.structure {
        Structure::Diagonal => QStructure::Diagonal,
        Structure::Sparse => QStructure::Sparse,
        Structure::LowRank => QStructure::LowRank,
    };
    let (n, m, d, seed) = (args.n, args.m, args.density, args.seed);
    let problem = match args.kind {
        GenKind::Qp => generate::random_qp(n, m, structure, d, seed),
        GenKind::PrimalInfeasible => generate::random_primal_infeasible(n, m, structure, d, seed),
        GenKind::DualInfeasible => generate::random_dual_infeasible(n, m, structure, d, seed),
        GenKind::Lasso => {
            if args.lambda < 0.0 {
                return Err(Failure::new(EXIT_USAGE, "--lambda must be nonnegative"));
            }
            let (a, b) = generate::random_lasso_data(m, n, d, seed);
            generate::make_lasso_qp(&a, &b, args.lambda).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?
        }
    };
    let text = match args.format {
        Format::Qps => write_qps(&problem, &format!("gen{seed}")),
        Format::Json => write_problem_json(&problem) + "\n",
    };
    write_out(args.output.as_deref(), &text)?;
    Ok(0)
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
    };
    outcome.unwrap_or_else(|f| {
        eprintln!("halqp: {}", f.message);
        f.code
    })
}
