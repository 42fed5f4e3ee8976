//! Command-line front end: `classify`, `simulate` and `graph`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 schema or validation error,
//! 3 map not positive on its cone (the report is still written),
//! 4 trajectory failure (initial vector outside the cone, vanishing
//! normalization, nilpotent map).

pub mod problem;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify, period, strongly_connected, ClassificationReport, Digraph};
use crate::cones::{ConeError, ConeSpec};
use crate::dynamics::{
    cesaro_trajectory, decoupling_trace, power_trajectory, BipartiteLayout, DynamicsError, TrajectoryRecord,
};
use crate::linalg::{Arithmetic, Rational, Tolerances, Vector};
use crate::maps::{MapError, Positivity};

pub use problem::{Literal, Problem, ProblemFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NOT_POSITIVE: i32 = 3;
pub const EXIT_TRAJECTORY: i32 = 4;

/// Environment variable with tolerance overrides: `eps_rank=1e-9,eps_cluster=1e-7`
/// or a bare number applied to all three tolerances.
pub const TOLERANCE_ENV: &str = "CONEMIX_TOL";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{0}")]
    Trajectory(String),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Trajectory(_) => EXIT_TRAJECTORY,
        }
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Schema(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::DimensionMismatch { .. } | DynamicsError::Cone(_) => CliError::Schema(e.to_string()),
            _ => CliError::Trajectory(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "conemix", version, about = "Ergodicity, mixing, irreducibility and primitivity of cone-preserving maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the map and print a JSON report.
    Classify {
        file: PathBuf,
        /// Also write the report to this path.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Arithmetic, overriding the file and inference.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Iterate the map and print a CSV trajectory followed by the verdict.
    Simulate {
        file: PathBuf,
        /// Comma-separated vector (`1/2,1/2`), `uniform`, or `e<k>` (1-based).
        #[arg(long, allow_hyphen_values = true)]
        init: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum)]
        mode: SimMode,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the transition digraph of a classical map in DOT format.
    Graph {
        file: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Cesaro,
    Power,
    Decouple,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub classify_ms: f64,
}

/// JSON report: the classification plus tool identification and timings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub report: ClassificationReport,
    pub timings: Timings,
}

/// Defaults overridden by `CONEMIX_TOL`.
pub fn env_tolerances(value: Option<&str>) -> Result<Tolerances, CliError> {
    let mut tol = Tolerances::default();
    let Some(text) = value.map(str::trim).filter(|t| !t.is_empty()) else {
        return Ok(tol);
    };
    let bad = |part: &str| CliError::schema(format!("{TOLERANCE_ENV}: cannot parse {part:?}"));
    if let Ok(v) = text.parse::<f64>() {
        tol = Tolerances { eps_rank: v, eps_cluster: v, eps_interior: v };
    } else {
        for part in text.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad(part))?;
            let v: f64 = value.trim().parse().map_err(|_| bad(part))?;
            match key.trim() {
                "eps_rank" => tol.eps_rank = v,
                "eps_cluster" => tol.eps_cluster = v,
                "eps_interior" => tol.eps_interior = v,
                _ => return Err(bad(part)),
            }
        }
    }
    tol.validate().map_err(|e| CliError::schema(format!("{TOLERANCE_ENV}: {e}")))?;
    Ok(tol)
}

/// Entry point for the binary.
pub fn main_with_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let env = std::env::var(TOLERANCE_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(&args, env.as_deref(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: &[String], env_tol: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, env_tol, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn read_problem(path: &Path, mode: Option<Arithmetic>, env_tol: Option<&str>) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let file = ProblemFile::parse(&text)?;
    Problem::build(file, mode, env_tolerances(env_tol)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn dispatch(command: Command, env_tol: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Classify { file, json, mode } => {
            let mode = mode.map(|m| match m {
                ModeArg::Rational => Arithmetic::ExactRational,
                ModeArg::Float => Arithmetic::Float,
            });
            let problem = read_problem(&file, mode, env_tol)?;
            let start = Instant::now();
            let report = classify(&problem.map, &problem.mode);
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let not_positive = report.positivity.value == Positivity::No;
            let doc = ReportFile {
                tool: "conemix".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                report,
                timings: Timings { classify_ms: elapsed },
            };
            let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
            if let Some(path) = json {
                write_file(&path, &text)?;
            }
            out.write_all(text.as_bytes()).map_err(io)?;
            Ok(if not_positive { EXIT_NOT_POSITIVE } else { EXIT_OK })
        }
        Command::Simulate { file, init, steps, mode, csv } => {
            let problem = read_problem(&file, None, env_tol)?;
            let x = initial_vector(&init, &problem)?;
            let record = simulate(&problem, &x, steps, mode)?;
            let table = trajectory_csv(&record);
            match csv {
                Some(path) => write_file(&path, &table)?,
                None => out.write_all(table.as_bytes()).map_err(io)?,
            }
            if let Some(limit) = &record.asymptotic {
                writeln!(out, "asymptotic limit: {}", join(limit)).map_err(io)?;
            }
            writeln!(out, "verdict: {}", record.verdict).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Graph { file, dot } => {
            let problem = read_problem(&file, None, env_tol)?;
            if !matches!(problem.map.cone(), ConeSpec::Orthant(_)) {
                return Err(CliError::schema(format!(
                    "NotClassical: graph needs an orthant cone, got {}",
                    problem.map.cone().kind()
                )));
            }
            let text = dot_graph(&Digraph::from_matrix(problem.map.matrix()));
            match dot {
                Some(path) => write_file(&path, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn simulate(problem: &Problem, x: &Vector, steps: usize, mode: SimMode) -> Result<TrajectoryRecord, CliError> {
    let map = &problem.map;
    match map.cone().contains(x, &problem.mode) {
        Ok(false) => return Err(DynamicsError::InitNotInCone.into()),
        Ok(true) | Err(ConeError::Unsupported(_)) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(match mode {
        SimMode::Cesaro => cesaro_trajectory(map, x, steps)?,
        SimMode::Power => power_trajectory(map, x, steps)?,
        SimMode::Decouple => {
            let ConeSpec::Tensor(t) = map.cone() else {
                return Err(CliError::schema("decouple mode needs a tensor cone"));
            };
            let units = match &problem.file.bipartite_units {
                Some([u1, u2]) => (
                    Some(problem::vector(u1, problem.mode.arithmetic)?),
                    Some(problem::vector(u2, problem.mode.arithmetic)?),
                ),
                None => (None, None),
            };
            let layout = BipartiteLayout::new(t.left.clone(), t.right.clone(), units.0, units.1, &problem.mode)?;
            decoupling_trace(map, x, &layout, steps)?
        }
    })
}

/// `uniform`, `e<k>` or a comma-separated literal list.
fn initial_vector(text: &str, problem: &Problem) -> Result<Vector, CliError> {
    let cone = problem.map.cone();
    let d = cone.dim();
    let arithmetic = problem.mode.arithmetic;
    let text = text.trim();
    if text == "uniform" {
        let x = interior_point(cone)?;
        let s = problem.map.unit().vector().dot(&x);
        let inv = s.recip().ok_or_else(|| CliError::schema("unit pairs to zero with the uniform state"))?;
        return Ok(x.scale(&inv));
    }
    if let Some(k) = text.strip_prefix('e').and_then(|k| k.parse::<usize>().ok()) {
        if k == 0 || k > d {
            return Err(CliError::schema(format!("preset e{k} out of range 1..={d}")));
        }
        let lits: Vec<Literal> = (1..=d).map(|i| Literal::Int(i64::from(i == k))).collect();
        return problem::vector(&lits, arithmetic);
    }
    let lits: Vec<Literal> = text.split(',').map(|t| Literal::Text(t.trim().to_owned())).collect();
    if lits.len() != d {
        return Err(CliError::schema(format!("--init has {} entries, the cone has dimension {d}", lits.len())));
    }
    problem::vector(&lits, arithmetic)
}

/// Interior point used by the `uniform` preset before normalization.
fn interior_point(cone: &ConeSpec) -> Result<Vector, CliError> {
    Ok(match cone {
        ConeSpec::Orthant(d) => Vector::Exact(vec![Rational::from_integer(1.into()); *d]),
        ConeSpec::Psd(b) => Vector::Float(b.identity_coords()),
        ConeSpec::Polyhedral(_) => {
            let gens = cone.extremal_generators()?;
            let mut acc = vec![Rational::from_integer(0.into()); cone.dim()];
            for g in &gens {
                for (a, v) in acc.iter_mut().zip(g.exact().expect("extremals are exact")) {
                    *a += v;
                }
            }
            Vector::Exact(acc)
        }
        ConeSpec::Tensor(t) => interior_point(&t.left)?.kron(&interior_point(&t.right)?),
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
}

/// Header row, then one row per step; 17 significant digits, LF endings.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut s = String::from("step");
    match record.mode {
        crate::dynamics::TrajectoryMode::Decoupling => s.push_str(",distance"),
        _ => {
            for i in 0..record.iterates.first().map_or(0, Vec::len) {
                let _ = write!(s, ",x{i}");
            }
        }
    }
    s.push('\n');
    for (k, row) in record.iterates.iter().enumerate() {
        let _ = writeln!(s, "{},{}", record.first_step + k, join(row));
    }
    s
}

/// DOT digraph with a comment stating connectivity and period.
pub fn dot_graph(g: &Digraph) -> String {
    let note = match period(g) {
        Ok(p) => format!("strongly connected, period {p}"),
        Err(_) => "not strongly connected".to_owned(),
    };
    debug_assert_eq!(strongly_connected(g), period(g).is_ok());
    let mut s = format!("// {note}\ndigraph transitions {{\n");
    for v in 0..g.vertex_count() {
        let _ = writeln!(s, "  {v};");
    }
    for (i, j) in g.edges() {
        let _ = writeln!(s, "  {i} -> {j};");
    }
    s.push_str("}\n");
    s
}
