//! Solver workers, the message protocol between them and the top-level
//! solve entry points.
//!
//! Every round starts with a barrier where each solver broadcasts which of
//! its agents still have to move and where. Pairs of areas with pending
//! crossings are then negotiated (the owner of the lower area calls the
//! owner of the higher one), colliding assignments are rejected, every
//! area is planned and the migrants that reached their border are handed
//! over. When nobody has work left, solver 1 stitches the plans together.

mod aggregate;
mod messages;
mod tasks;
mod trace;
mod transport;
mod worker;

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GlobalSolution, Problem};
use crate::motion::MotionConfig;
use crate::partition::{divide, Partition, PartitionError};

pub use aggregate::aggregate;
pub use messages::{
    AggregateBody, ConfirmBody, Envelope, Failure, Kind, MigrantRecord, NegotiateRequest, NegotiateResponse, Pending,
    Phase, RejectBody, RoundPlans, TrackMessage,
};
pub use tasks::{determine_tasks, pending_pairs, Tasks};
pub use trace::{parse_trace, Trace, TraceEvent};
pub use transport::{in_process, process_of, read_frame, tcp_process, write_frame, InProcEndpoint, TcpEndpoint, Transport};
pub use worker::{confirm_apply, AgentState, Worker, WorkerOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("unsolvable: {0}")]
    Unsolvable(String),
    #[error("timed out")]
    Timeout,
    #[error("protocol stalled: {0}")]
    Stalled(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("no progress after {0} rounds")]
    RoundLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub dx: i32,
    pub dy: i32,
    pub motion: MotionConfig,
    /// Recorded for reproducibility; every choice the solver makes is
    /// already ordered by ids.
    pub seed: u64,
    pub timeout: Duration,
    pub barrier_timeout: Duration,
    pub rpc_timeout: Duration,
    /// Defaults to 4 × areas × longest abstract plan.
    pub max_rounds: Option<usize>,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            dx: 8,
            dy: 8,
            motion: MotionConfig::default(),
            seed: 0,
            timeout: Duration::from_secs(180),
            barrier_timeout: Duration::from_secs(30),
            rpc_timeout: Duration::from_secs(30),
            max_rounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub solution: GlobalSolution,
    pub rounds: usize,
    pub solvers: usize,
    pub areas: usize,
    pub elapsed: Duration,
}

/// Runs the given endpoints to completion, one thread each, and returns
/// solver 1's output if it is among them.
fn run_workers<T: Transport>(
    endpoints: Vec<T>,
    problem: &Problem,
    part: &Partition,
    cfg: &RuntimeConfig,
    trace: &Trace,
    started: Instant,
) -> Result<Option<WorkerOutput>, RuntimeError> {
    let problem = Arc::new(problem.clone());
    let part = Arc::new(part.clone());
    let deadline = started + cfg.timeout;
    let results: Vec<(u32, Result<WorkerOutput, RuntimeError>)> = thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .map(|ep| {
                let id = ep.id().0;
                let w = Worker::new(ep, problem.clone(), part.clone(), cfg.clone(), deadline, trace.clone());
                (id, s.spawn(move || w.run()))
            })
            .collect();
        handles
            .into_iter()
            .map(|(id, h)| {
                let r = h
                    .join()
                    .unwrap_or_else(|_| Err(RuntimeError::Internal(format!("solver {id} panicked"))));
                (id, r)
            })
            .collect()
    });
    trace.flush();
    // Prefer a real cause over peers that merely stopped hearing from it.
    let mut errors: Vec<&RuntimeError> = results.iter().filter_map(|(_, r)| r.as_ref().err()).collect();
    errors.sort_by_key(|e| matches!(e, RuntimeError::Stalled(_) | RuntimeError::Transport(_)));
    if let Some(e) = errors.first() {
        return Err((*e).clone());
    }
    Ok(results
        .into_iter()
        .find(|(id, _)| *id == 1)
        .map(|(_, r)| r.expect("errors returned above")))
}

fn report(out: WorkerOutput, part: &Partition, started: Instant) -> Result<SolveReport, RuntimeError> {
    let solution = out
        .solution
        .ok_or_else(|| RuntimeError::Internal("solver 1 returned no solution".into()))?;
    Ok(SolveReport {
        solution,
        rounds: out.rounds,
        solvers: part.solver_count(),
        areas: part.area_count(),
        elapsed: started.elapsed(),
    })
}

/// Solves `p` with all solvers in this process on the in-process bus.
pub fn solve(p: &Problem, cfg: &RuntimeConfig, trace: &Trace) -> Result<SolveReport, RuntimeError> {
    let started = Instant::now();
    let part = divide(p, cfg.dx, cfg.dy)?;
    let endpoints = in_process(part.solver_count());
    let out = run_workers(endpoints, p, &part, cfg, trace, started)?.expect("solver 1 runs in process");
    report(out, &part, started)
}

/// Runs the solvers that `process` hosts, talking TCP to the other
/// processes listed in `endpoints`. Only the process hosting solver 1
/// returns a report.
pub fn solve_tcp_process(
    p: &Problem,
    cfg: &RuntimeConfig,
    process: usize,
    endpoints: Vec<SocketAddr>,
    trace: &Trace,
) -> Result<Option<SolveReport>, RuntimeError> {
    let started = Instant::now();
    let part = divide(p, cfg.dx, cfg.dy)?;
    let eps = tcp_process(process, endpoints, part.solver_count(), cfg.rpc_timeout)?;
    match run_workers(eps, p, &part, cfg, trace, started)? {
        Some(out) => report(out, &part, started).map(Some),
        None => Ok(None),
    }
}
