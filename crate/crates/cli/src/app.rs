//! Command-line definitions and the command implementations.

use std::fs;
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mapf_core::model::{parse_instance, validate, GlobalSolution, ModelError, Problem, ValidationReport};
use mapf_core::motion::MotionConfig;
use mapf_core::partition::{divide, Partition, PartitionError};
use mapf_core::runtime::{solve, solve_tcp_process, RuntimeConfig, RuntimeError, Trace};
use thiserror::Error;
use tracing::info;

use crate::bench::{format_table, parse_rows, reference_rows, run_bench, TableFormat};
use crate::generate::{generate, GenerateError, GenerateSpec};
use crate::render;

#[derive(Debug, Parser)]
#[command(name = "mapf", version, about = "Area-partitioned multi-agent path finding on grids")]
pub struct Cli {
    /// Log filter, e.g. `info` or `mapf_core=debug`.
    #[arg(long, global = true, env = "MAPF_LOG", default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Solve an instance and write the solution as JSON and text.
    Solve(SolveArgs),
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Check a solution against its instance.
    Validate(ValidateArgs),
    /// Run a benchmark matrix and print a table.
    Bench(BenchArgs),
    /// Draw a partition or a solution.
    Render(RenderArgs),
    /// Dump the partition of an instance.
    Partition(PartitionArgs),
    /// Run one process of a TCP deployment.
    Worker(WorkerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    Inproc,
    Tcp,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, env = "MAPF_DX", default_value_t = 8)]
    pub dx: i32,
    #[arg(long, env = "MAPF_DY", default_value_t = 8)]
    pub dy: i32,
    /// Horizon sensitivity.
    #[arg(long = "F", env = "MAPF_F", default_value_t = 2.0)]
    pub sensitivity: f64,
    /// Free nodes needed before entry nodes are kept clear.
    #[arg(long, env = "MAPF_NF", default_value_t = 4)]
    pub nf: usize,
    #[arg(long, env = "MAPF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Overall timeout in seconds.
    #[arg(long, env = "MAPF_TIMEOUT", default_value_t = 180.0)]
    pub timeout: f64,
    /// Barrier and request timeout in seconds.
    #[arg(long, env = "MAPF_WAIT_TIMEOUT", default_value_t = 30.0)]
    pub wait_timeout: f64,
    #[arg(long, env = "MAPF_MAX_ROUNDS")]
    pub max_rounds: Option<usize>,
}

impl RunArgs {
    pub fn runtime_config(&self) -> RuntimeConfig {
        RuntimeConfig {
            dx: self.dx,
            dy: self.dy,
            motion: MotionConfig {
                sensitivity: self.sensitivity,
                n_f: self.nf,
            },
            seed: self.seed,
            timeout: Duration::from_secs_f64(self.timeout),
            barrier_timeout: Duration::from_secs_f64(self.wait_timeout),
            rpc_timeout: Duration::from_secs_f64(self.wait_timeout),
            max_rounds: self.max_rounds,
        }
    }

    fn to_flags(&self) -> Vec<String> {
        let mut f = vec![
            format!("--dx={}", self.dx),
            format!("--dy={}", self.dy),
            format!("--F={}", self.sensitivity),
            format!("--nf={}", self.nf),
            format!("--seed={}", self.seed),
            format!("--timeout={}", self.timeout),
            format!("--wait-timeout={}", self.wait_timeout),
        ];
        if let Some(m) = self.max_rounds {
            f.push(format!("--max-rounds={m}"));
        }
        f
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Output prefix; `.json` and `.txt` are appended. Defaults to the
    /// instance path with a `.solution` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every protocol message as NDJSON here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, env = "MAPF_TRANSPORT", default_value_t = TransportKind::Inproc)]
    pub transport: TransportKind,
    /// Worker processes in tcp mode.
    #[arg(long, env = "MAPF_PROCESSES", default_value_t = 2)]
    pub processes: usize,
    /// Listen addresses of the worker processes in tcp mode; picked on
    /// localhost when empty.
    #[arg(long, env = "MAPF_ENDPOINTS", value_delimiter = ',')]
    pub endpoints: Vec<SocketAddr>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 24)]
    pub width: usize,
    #[arg(long, default_value_t = 24)]
    pub height: usize,
    #[arg(long, default_value_t = 23)]
    pub agents: usize,
    #[arg(long, env = "MAPF_DENSITY", default_value_t = 0.0)]
    pub density: f64,
    #[arg(long, env = "MAPF_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Only give agents goals they can reach.
    #[arg(long, env = "MAPF_SOLVABLE")]
    pub solvable: bool,
    /// Defaults to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    /// JSON or text solution.
    pub solution: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// `WxH:N[,N...]`, repeatable.
    #[arg(long = "row")]
    pub rows: Vec<String>,
    /// Add the desk-scale reference rows.
    #[arg(long)]
    pub reference: bool,
    #[arg(long, env = "MAPF_DENSITY", default_value_t = 0.0)]
    pub density: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Markdown)]
    pub format: TableFormat,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Svg,
    Ascii,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub instance: PathBuf,
    /// Draw this solution, one frame per time step.
    #[arg(long, conflicts_with = "partition")]
    pub solution: Option<PathBuf>,
    /// Draw this partition dump instead of dividing with --dx/--dy.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RenderFormat::Svg)]
    pub format: RenderFormat,
    /// A file, or a directory of frames for SVG solutions.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, env = "MAPF_DX", default_value_t = 8)]
    pub dx: i32,
    #[arg(long, env = "MAPF_DY", default_value_t = 8)]
    pub dy: i32,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    pub instance: PathBuf,
    #[arg(long, env = "MAPF_DX", default_value_t = 8)]
    pub dx: i32,
    #[arg(long, env = "MAPF_DY", default_value_t = 8)]
    pub dy: i32,
    /// Write the JSON dump here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkerArgs {
    pub instance: PathBuf,
    /// 1-based index into the endpoint list.
    #[arg(long)]
    pub process: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub endpoints: Vec<SocketAddr>,
    /// Where the process hosting solver 1 writes the solution JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("solution is invalid:\n{0}")]
    Invalid(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 0 ok, 2 unreadable input, 3 unsolvable, 4 timeout, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Model(_) | CliError::Partition(_) => 2,
            CliError::Runtime(e) => match e {
                RuntimeError::Partition(_) => 2,
                RuntimeError::Unsolvable(_) | RuntimeError::RoundLimit(_) => 3,
                RuntimeError::Timeout | RuntimeError::Stalled(_) => 4,
                _ => 1,
            },
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_problem(path: &Path) -> Result<Problem, CliError> {
    Ok(parse_instance(&read(path)?)?)
}

/// Reads a solution in either format.
pub fn load_solution(path: &Path, p: &Problem) -> Result<GlobalSolution, CliError> {
    let text = read(path)?;
    Ok(if text.trim_start().starts_with('{') {
        GlobalSolution::from_json(&text)?
    } else {
        GlobalSolution::from_text(&text, p)?
    })
}

fn trace_for(path: Option<&Path>) -> Result<Trace, CliError> {
    match path {
        None => Ok(Trace::off()),
        Some(p) => Trace::to_file(p).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
    }
}

/// Runs one command. Output meant for the user goes to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Render(a) => cmd_render(a),
        Cmd::Partition(a) => cmd_partition(a),
        Cmd::Worker(a) => cmd_worker(a),
    }
}

fn out_prefix(a: &SolveArgs) -> PathBuf {
    a.out.clone().unwrap_or_else(|| a.instance.with_extension("solution"))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// What a successful solve produced.
#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: GlobalSolution,
    pub elapsed: Duration,
    /// Where the JSON and text forms were written.
    pub json: PathBuf,
    pub text: PathBuf,
}

/// The solve command without the metrics line: solves, checks the result
/// and writes both output files.
pub fn solve_file(a: &SolveArgs) -> Result<Solved, CliError> {
    let p = load_problem(&a.instance)?;
    let cfg = a.run.runtime_config();
    let started = Instant::now();
    let solution = match a.transport {
        TransportKind::Inproc => {
            let trace = trace_for(a.trace.as_deref())?;
            let report = solve(&p, &cfg, &trace)?;
            info!(rounds = report.rounds, solvers = report.solvers, areas = report.areas, "solved");
            report.solution
        }
        TransportKind::Tcp => spawn_tcp(a)?,
    };
    let elapsed = started.elapsed();
    let report = validate(&p, &solution);
    if !report.ok {
        return Err(CliError::Invalid(report.to_string()));
    }
    let prefix = out_prefix(a);
    let (json, text) = (with_suffix(&prefix, ".json"), with_suffix(&prefix, ".txt"));
    write(&json, &solution.to_json())?;
    write(&text, &solution.to_text(&p)?)?;
    Ok(Solved {
        solution,
        elapsed,
        json,
        text,
    })
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let s = solve_file(&a)?;
    println!(
        "time={:.1} span={} moves={}",
        s.elapsed.as_secs_f64(),
        s.solution.makespan,
        s.solution.moves
    );
    Ok(())
}

fn free_ports(n: usize) -> Result<Vec<SocketAddr>, CliError> {
    // Bind all at once so the ports are distinct, then release them.
    let listeners: Vec<TcpListener> = (0..n)
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Other(format!("no free port: {e}")))?;
    listeners
        .iter()
        .map(|l| l.local_addr().map_err(|e| CliError::Other(e.to_string())))
        .collect()
}

/// Starts one `mapf worker` child per endpoint and returns the solution
/// written by the process hosting solver 1.
fn spawn_tcp(a: &SolveArgs) -> Result<GlobalSolution, CliError> {
    let endpoints = if a.endpoints.is_empty() {
        free_ports(a.processes.max(1))?
    } else {
        a.endpoints.clone()
    };
    let list: Vec<String> = endpoints.iter().map(|e| e.to_string()).collect();
    let exe = std::env::current_exe().map_err(|e| CliError::Other(format!("cannot locate own binary: {e}")))?;
    let tmp = with_suffix(&out_prefix(a), ".worker.json");
    let mut children = Vec::new();
    for k in 1..=endpoints.len() {
        let mut cmd = Command::new(&exe);
        cmd.arg("worker")
            .arg(&a.instance)
            .arg(format!("--process={k}"))
            .arg(format!("--endpoints={}", list.join(",")))
            .args(a.run.to_flags());
        if k == 1 {
            cmd.arg("--out").arg(&tmp);
        }
        if let Some(t) = &a.trace {
            cmd.arg("--trace").arg(with_suffix(t, &format!(".{k}")));
        }
        let child = cmd
            .spawn()
            .map_err(|e| CliError::Other(format!("cannot start worker {k}: {e}")))?;
        children.push((k, child));
    }
    let mut first_failure = None;
    for (k, mut child) in children {
        let status = child
            .wait()
            .map_err(|e| CliError::Other(format!("worker {k}: {e}")))?;
        if !status.success() && first_failure.is_none() {
            first_failure = Some((k, status.code().unwrap_or(1)));
        }
    }
    if let Some((k, code)) = first_failure {
        let err = match code {
            3 => RuntimeError::Unsolvable(format!("reported by worker process {k}")).into(),
            4 => RuntimeError::Timeout.into(),
            _ => CliError::Other(format!("worker process {k} exited with {code}")),
        };
        return Err(err);
    }
    let text = read(&tmp)?;
    let _ = fs::remove_file(&tmp);
    Ok(GlobalSolution::from_json(&text)?)
}

fn cmd_worker(a: WorkerArgs) -> Result<(), CliError> {
    let p = load_problem(&a.instance)?;
    let trace = trace_for(a.trace.as_deref())?;
    let report = solve_tcp_process(&p, &a.run.runtime_config(), a.process, a.endpoints.clone(), &trace)?;
    if let Some(r) = report {
        info!(rounds = r.rounds, "solved");
        match &a.out {
            Some(path) => write(path, &r.solution.to_json())?,
            None => println!("{}", r.solution.to_json()),
        }
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<(), CliError> {
    let g = generate(&GenerateSpec {
        width: a.width,
        height: a.height,
        agents: a.agents,
        density: a.density,
        seed: a.seed,
        solvable: a.solvable,
    })?;
    match &a.out {
        Some(path) => write(path, &g.text),
        None => {
            print!("{}", g.text);
            Ok(())
        }
    }
}

/// Loads both files and checks the solution.
pub fn validate_files(instance: &Path, solution: &Path) -> Result<(GlobalSolution, ValidationReport), CliError> {
    let p = load_problem(instance)?;
    let sol = load_solution(solution, &p)?;
    let report = validate(&p, &sol);
    Ok((sol, report))
}

fn cmd_validate(a: ValidateArgs) -> Result<(), CliError> {
    let (sol, report) = validate_files(&a.instance, &a.solution)?;
    if !report.ok {
        print!("{report}");
        return Err(CliError::Invalid(format!("{} violation(s)", report.violations.len())));
    }
    println!("ok span={} moves={}", sol.makespan, sol.moves);
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    if a.reference {
        rows.extend(reference_rows());
    }
    for r in &a.rows {
        rows.extend(parse_rows(r).map_err(CliError::Parse)?);
    }
    let results = run_bench(&rows, a.density, a.run.seed, &a.run.runtime_config());
    print!("{}", format_table(&results, a.format));
    Ok(())
}

fn load_partition(a: &RenderArgs, p: &Problem) -> Result<Partition, CliError> {
    Ok(match &a.partition {
        Some(path) => Partition::from_json(&read(path)?, p)?,
        None => divide(p, a.dx, a.dy)?,
    })
}

fn cmd_render(a: RenderArgs) -> Result<(), CliError> {
    let p = load_problem(&a.instance)?;
    let part = load_partition(&a, &p)?;
    let Some(sol_path) = &a.solution else {
        let text = match a.format {
            RenderFormat::Svg => render::partition_svg(&p, &part),
            RenderFormat::Ascii => render::partition_ascii(&p, &part),
        };
        return write(&a.out, &text);
    };
    let sol = load_solution(sol_path, &p)?;
    match a.format {
        RenderFormat::Ascii => write(&a.out, &render::solution_ascii(&p, &part, &sol)),
        RenderFormat::Svg => {
            fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
                path: a.out.clone(),
                source,
            })?;
            for (t, frame) in render::solution_svg(&p, &part, &sol).iter().enumerate() {
                write(&a.out.join(format!("frame_{t:05}.svg")), frame)?;
            }
            Ok(())
        }
    }
}

fn cmd_partition(a: PartitionArgs) -> Result<(), CliError> {
    let p = load_problem(&a.instance)?;
    let part = divide(&p, a.dx, a.dy)?;
    let corners: usize = part.areas.iter().map(|ar| ar.corners.len()).sum();
    println!(
        "solvers={} areas={} links={} corners={}",
        part.solver_count(),
        part.area_count(),
        part.links.pairs.len(),
        corners
    );
    if let Some(path) = &a.out {
        write(path, &part.to_json())?;
    }
    Ok(())
}
