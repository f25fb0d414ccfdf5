//! Acceptance suite: one pass/fail line per criterion.
//!
//! Every criterion runs on its own thread; the protocol trace check runs
//! last over the traces the others recorded.

mod oracle;
mod trace_check;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use clap::Parser;
use mapf_cli::app::{solve_file, validate_files, Cmd};
use mapf_cli::generate::{generate, GenerateSpec};
use mapf_cli::Cli;
use mapf_core::abstract_plan::abstract_plan;
use mapf_core::model::{parse_grid, validate, AgentId, NodeId, Problem};
use mapf_core::motion::{plan_movements, AreaInstance, MotionError};
use mapf_core::negotiate::{admit, assign_borders, blocked_counts, build_tiers, BorderPair, Candidate, HostBlocks, Side};
use mapf_core::partition::{divide, AreaId, LinkGraph, Partition};
use mapf_core::runtime::{parse_trace, solve, Kind, Phase, RuntimeConfig, SolveReport, Trace, TraceEvent};
use mapf_core::model::Coord;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned limits.
const C1_INSTANCES: usize = 100;
const C1_MIN_RATE_LOW_DENSITY: f64 = 0.95;
const C1_TIME_LIMIT: Duration = Duration::from_secs(600);
const C2_SOLVE_LIMIT: Duration = Duration::from_secs(180);
const C2_RATIO: f64 = 2.5;
const C3_INSTANCES: usize = 200;
const C3_TIME_LIMIT: Duration = Duration::from_secs(30);
const C4_INSTANCES: usize = 200;
const C4_TIME_LIMIT: Duration = Duration::from_secs(60);
const C5_INSTANCES: usize = 100;
const C6_MAPS: usize = 50;

/// Reference rows: (width, agents, span, moves).
const REFERENCE: [(usize, usize, usize, usize); 6] = [
    (24, 23, 41, 443),
    (24, 46, 44, 960),
    (24, 69, 51, 1432),
    (24, 92, 57, 2119),
    (24, 120, 61, 2751),
    (48, 92, 104, 2890),
];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Per recorded trace: a label and its violations.
static TRACES: Mutex<Vec<(String, Vec<String>)>> = Mutex::new(Vec::new());

fn record_trace(label: &str, events: &[TraceEvent], part: &Partition, complete: bool) {
    let bad = trace_check::violations(events, part, complete);
    TRACES.lock().unwrap().push((label.to_string(), bad));
}

fn solve_traced(label: &str, p: &Problem, cfg: &RuntimeConfig) -> Result<SolveReport, String> {
    let trace = Trace::memory();
    let result = solve(p, cfg, &trace);
    if let Ok(part) = divide(p, cfg.dx, cfg.dy) {
        record_trace(label, &trace.events(), &part, result.is_ok());
    }
    result.map_err(|e| e.to_string())
}

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("mapf").chain(args.iter().copied())).expect("test arguments parse")
}

fn solve_args(args: &[&str]) -> mapf_cli::app::SolveArgs {
    let mut v = vec!["solve"];
    v.extend_from_slice(args);
    match cli(&v).command {
        Cmd::Solve(a) => a,
        _ => unreachable!(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are utf-8")
}

fn mapf_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mapf"))
}

// 1. End-to-end soundness over generated instances with obstacles.
fn c1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let cases: Vec<(usize, usize, f64, usize, u64)> = (0..C1_INSTANCES)
        .map(|i| {
            let size = [12, 24][i % 2];
            let density = [0.0, 0.1, 0.2][(i / 2) % 3];
            let agents = 5 + (i * 13) % 36;
            (i, size, density, agents, 1000 + i as u64)
        })
        .collect();
    let workers = thread::available_parallelism().map_or(4, |n| n.get()).min(8);
    let chunks: Vec<Vec<(usize, usize, f64, usize, u64)>> = (0..workers)
        .map(|w| cases.iter().copied().skip(w).step_by(workers).collect())
        .collect();
    // (density, solved, invalid detail)
    let results: Vec<(f64, bool, Option<String>)> = thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                let dir = dir.path();
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|&(i, size, density, agents, seed)| {
                            let g = generate(&GenerateSpec {
                                width: size,
                                height: size,
                                agents,
                                density,
                                seed,
                                solvable: true,
                            })
                            .expect("generator accepts these parameters");
                            let inst = dir.join(format!("c1_{i}.txt"));
                            let trace = dir.join(format!("c1_{i}.ndjson"));
                            let out = dir.join(format!("c1_{i}.solution"));
                            std::fs::write(&inst, &g.text).unwrap();
                            let args = solve_args(&[
                                path_str(&inst),
                                "--trace",
                                path_str(&trace),
                                "--out",
                                path_str(&out),
                                "--seed",
                                &seed.to_string(),
                            ]);
                            let solved = solve_file(&args);
                            if let (Ok(text), Ok(part)) = (std::fs::read_to_string(&trace), divide(&g.problem, 8, 8)) {
                                let events = parse_trace(&text).unwrap_or_default();
                                record_trace(&format!("c1 #{i}"), &events, &part, solved.is_ok());
                            }
                            match solved {
                                Err(e) => {
                                    eprintln!("  c1 #{i} {size}x{size} d={density} n={agents}: {e}");
                                    (density, false, None)
                                }
                                Ok(s) => {
                                    let invalid = match validate_files(&inst, &s.json) {
                                        Ok((_, r)) if r.ok => None,
                                        Ok((_, r)) => Some(format!("#{i}: {r}")),
                                        Err(e) => Some(format!("#{i}: {e}")),
                                    };
                                    (density, true, invalid)
                                }
                            }
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let elapsed = started.elapsed();
    let low: Vec<&(f64, bool, Option<String>)> = results.iter().filter(|r| r.0 <= 0.1).collect();
    let low_rate = low.iter().filter(|r| r.1).count() as f64 / low.len() as f64;
    let solved = results.iter().filter(|r| r.1).count();
    let invalid: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    let pass = invalid.is_empty() && low_rate >= C1_MIN_RATE_LOW_DENSITY && elapsed < C1_TIME_LIMIT;
    Outcome::new(
        pass,
        format!(
            "{solved}/{} solved, rate at density<=0.1 {:.1}%, {} invalid, {:.1}s",
            results.len(),
            low_rate * 100.0,
            invalid.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// 2. Desk-scale reproduction of the reference table rows.
fn c2() -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for (k, &(w, n, span_ref, moves_ref)) in REFERENCE.iter().enumerate() {
        let g = generate(&GenerateSpec::open(w, w, n, k as u64 + 1)).unwrap();
        match solve_traced(&format!("c2 {w}x{w}/{n}"), &g.problem, &RuntimeConfig::default()) {
            Ok(r) => {
                let ok_valid = validate(&g.problem, &r.solution).ok;
                let span_ratio = r.solution.makespan as f64 / span_ref as f64;
                let moves_ratio = r.solution.moves as f64 / moves_ref as f64;
                let within = |x: f64| (1.0 / C2_RATIO..=C2_RATIO).contains(&x);
                let row_ok = ok_valid
                    && r.elapsed < C2_SOLVE_LIMIT
                    && (w != 24 || (within(span_ratio) && within(moves_ratio)));
                pass &= row_ok;
                rows.push(format!(
                    "{w}x{w}/{n}: {:.2}s span {} ({span_ratio:.2}x) moves {} ({moves_ratio:.2}x){}",
                    r.elapsed.as_secs_f64(),
                    r.solution.makespan,
                    r.solution.moves,
                    if row_ok { "" } else { " FAIL" }
                ));
            }
            Err(e) => {
                pass = false;
                rows.push(format!("{w}x{w}/{n}: {e}"));
            }
        }
    }
    Outcome::new(pass, rows.join("; "))
}

fn random_pair_instance(rng: &mut ChaCha8Rng) -> (Vec<Candidate>, Vec<BorderPair>, HostBlocks) {
    // Host nodes sit on column 0, remote nodes on column 1.
    let n_pairs = rng.random_range(1..=4usize);
    let mut pairs: Vec<BorderPair> = Vec::new();
    for i in 0..n_pairs {
        let y = i as i32;
        let mut host = (NodeId(1 + i as u32), Coord::new(0, y));
        let mut remote = (NodeId(101 + i as u32), Coord::new(1, y));
        if i > 0 && rng.random_bool(0.2) {
            let k = rng.random_range(0..i);
            if rng.random_bool(0.5) {
                host = (pairs[k].0, pairs[k].1);
            } else {
                remote = (pairs[k].2, pairs[k].3);
            }
        }
        if pairs.iter().any(|p| p.0 == host.0 && p.2 == remote.0) {
            continue;
        }
        pairs.push((host.0, host.1, remote.0, remote.1));
    }
    let n_cands = rng.random_range(0..=4usize);
    let cands = (0..n_cands)
        .map(|i| {
            let side = if rng.random_bool(0.5) { Side::Outgoing } else { Side::Incoming };
            let x = match side {
                Side::Outgoing => rng.random_range(-4..=0),
                Side::Incoming => rng.random_range(1..=5),
            };
            let at = Coord::new(x, rng.random_range(-1..=5));
            Candidate {
                agent: AgentId(i as u32 + 1),
                node: NodeId(1000 + i as u32),
                at,
                tier: rng.random_range(1..=3),
                side,
                mandatory: false,
            }
        })
        .collect();
    let mut blocks = HostBlocks::default();
    for p in &pairs {
        if rng.random_bool(0.15) {
            blocks.from.insert(p.0);
        }
        if rng.random_bool(0.15) {
            blocks.to.insert(p.0);
        }
        if rng.random_bool(0.08) {
            blocks.parked.insert(p.0);
        }
        if rng.random_bool(0.08) {
            blocks.parked.insert(p.2);
        }
    }
    (cands, pairs, blocks)
}

// 3. Border assignment against exhaustive enumeration.
fn c3() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut agree, mut solved, mut failures) = (0, 0, Vec::new());
    for i in 0..C3_INSTANCES {
        let (cands, pairs, blocks) = random_pair_instance(&mut rng);
        let (n_bi, n_bo) = blocked_counts(&pairs, &blocks);
        let (state, admitted) = admit(&build_tiers(cands), AreaId(1), AreaId(2), pairs.len(), n_bi, n_bo);
        let expected_limit = (state.n_i.min(state.n_ai) + state.n_o.min(state.n_ao)).min(state.n_ai.max(state.n_ao));
        let want = oracle::min_assignment(&admitted, &pairs, &blocks, state.limit);
        let got = assign_borders(&admitted, &pairs, &blocks, state.limit);
        let ok = state.limit == expected_limit
            && match (&want, &got) {
                (None, None) => true,
                (Some(w), Some(g)) => {
                    let total: u32 = g.iter().map(|a| a.distance).sum();
                    let froms: BTreeSet<NodeId> = g.iter().map(|a| a.from_border).collect();
                    let tos: BTreeSet<NodeId> = g.iter().map(|a| a.to_border).collect();
                    total == *w && g.len() == state.limit && froms.len() == g.len() && tos.len() == g.len()
                }
                _ => false,
            };
        if got.is_some() {
            solved += 1;
        }
        if ok {
            agree += 1;
        } else {
            failures.push(format!("#{i}: oracle {want:?}, got {got:?}"));
        }
    }
    let elapsed = started.elapsed();
    for f in failures.iter().take(3) {
        eprintln!("  c3 {f}");
    }
    Outcome::new(
        agree == C3_INSTANCES && elapsed < C3_TIME_LIMIT,
        format!(
            "{agree}/{C3_INSTANCES} agree ({solved} assignable), {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn random_area_instance(rng: &mut ChaCha8Rng) -> Option<(Problem, Partition, AreaId, AreaInstance, usize)> {
    // A 3x3 block of 4x3 tiles; the planned area lies in the middle tile.
    let (w, h) = (12, 9);
    let density = rng.random_range(0.0..0.35);
    let mut text = String::from("\n");
    for _ in 0..h {
        for _ in 0..w {
            text.push(if rng.random_bool(density) { '#' } else { '.' });
        }
        text.push('\n');
    }
    let p = parse_grid(&text).ok()?;
    let part = divide(&p, 4, 3).ok()?;
    let middle = |c: Coord| (4..8).contains(&c.x) && (3..6).contains(&c.y);
    let area = part
        .areas
        .iter()
        .filter(|a| a.nodes.values().all(|&c| middle(c)))
        .max_by_key(|a| a.node_count())?;
    let nodes: Vec<NodeId> = area.nodes.keys().copied().collect();
    let outs: Vec<NodeId> = area.out_nodes.keys().copied().collect();
    let k = rng.random_range(1..=3usize).min(nodes.len());
    let mut inst = AreaInstance::new(area.id, 0);
    let mut free_in = nodes.clone();
    free_in.shuffle(rng);
    let mut free_out = outs.clone();
    free_out.shuffle(rng);
    let mut goals = nodes.clone();
    goals.shuffle(rng);
    for i in 0..k {
        let a = AgentId(i as u32 + 1);
        if rng.random_bool(0.3) && !free_out.is_empty() {
            inst.incoming.insert(a, free_out.pop().unwrap());
        } else {
            inst.residents.insert(a, free_in.pop()?);
        }
        if rng.random_bool(0.7) {
            inst.plan_goals.insert(a, goals.pop()?);
        }
    }
    for &n in &nodes {
        if rng.random_bool(0.2) {
            inst.reserved.insert(n);
        }
    }
    inst.crowding_enforced = rng.random_bool(0.5);
    let h_m = rng.random_range(0..=10usize);
    let id = area.id;
    Some((p, part, id, inst, h_m))
}

// 4. Movement planner against joint-state breadth-first search.
fn c4() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut done, mut agree, mut feasible) = (0, 0, 0);
    let mut failures = Vec::new();
    while done < C4_INSTANCES {
        let Some((p, part, id, inst, h_m)) = random_area_instance(&mut rng) else {
            continue;
        };
        done += 1;
        let area = part.area(id);
        let want = oracle::min_horizon(&p, area, &inst, h_m);
        let got = plan_movements(area, &inst, h_m, None);
        let ok = match (&want, &got) {
            (None, Err(MotionError::Infeasible(_))) => true,
            (Some(t), Ok(plan)) => {
                plan.horizon == *t && oracle::plan_is_legal(&p, area, &inst, &plan.steps, plan.horizon)
            }
            _ => false,
        };
        if want.is_some() {
            feasible += 1;
        }
        if ok {
            agree += 1;
        } else {
            failures.push(format!("{inst:?} h_m={h_m}: oracle {want:?}, got {:?}", got.map(|p| p.horizon)));
        }
    }
    let elapsed = started.elapsed();
    for f in failures.iter().take(3) {
        eprintln!("  c4 {f}");
    }
    Outcome::new(
        agree == C4_INSTANCES && elapsed < C4_TIME_LIMIT,
        format!(
            "{agree}/{C4_INSTANCES} agree ({feasible} feasible, {} infeasible), {:.2}s",
            C4_INSTANCES - feasible,
            elapsed.as_secs_f64()
        ),
    )
}

// 5. Abstract plans against breadth-first hop distance.
fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut agree, mut unreachable) = (0, 0);
    for i in 0..C5_INSTANCES {
        let n = rng.random_range(1..=25u32);
        let p_edge = rng.random_range(0.03..0.3);
        let areas: Vec<AreaId> = (1..=n).map(AreaId).collect();
        let mut edges = Vec::new();
        for a in 1..=n {
            for b in a + 1..=n {
                if rng.random_bool(p_edge) {
                    edges.push((AreaId(a), AreaId(b)));
                }
            }
        }
        let g = LinkGraph::from_edges(areas.iter().copied(), &edges);
        let (s, t) = (AreaId(rng.random_range(1..=n)), AreaId(rng.random_range(1..=n)));
        let want = oracle::hop_distance(&edges, s, t);
        let got = abstract_plan(&g, s, t, n as usize).expect("areas exist");
        let linked: BTreeSet<(AreaId, AreaId)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        let ok = match (&want, &got) {
            (None, None) => {
                unreachable += 1;
                true
            }
            (Some(d), Some(plan)) => {
                plan.remaining() == *d
                    && plan.current() == s
                    && plan.goal() == t
                    && plan.areas.windows(2).all(|w| linked.contains(&(w[0], w[1])))
            }
            _ => false,
        };
        if ok {
            agree += 1;
        } else {
            eprintln!("  c5 #{i}: oracle {want:?}, got {got:?}");
        }
    }
    Outcome::new(
        agree == C5_INSTANCES,
        format!("{agree}/{C5_INSTANCES} agree ({unreachable} unreachable)"),
    )
}

// 6. Structural invariants of partitions of random obstacle maps.
fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut clean, mut areas) = (0, 0, 0);
    while checked < C6_MAPS {
        let (w, h) = (rng.random_range(4..=20usize), rng.random_range(4..=20usize));
        let density = rng.random_range(0.0..0.4);
        let mut text = String::from("\n");
        for _ in 0..h {
            for _ in 0..w {
                text.push(if rng.random_bool(density) { '#' } else { '.' });
            }
            text.push('\n');
        }
        let Ok(p) = parse_grid(&text) else { continue };
        if p.node_count() == 0 {
            continue;
        }
        let (dx, dy) = (rng.random_range(2..=6), rng.random_range(2..=6));
        checked += 1;
        match divide(&p, dx, dy) {
            Ok(part) => {
                areas += part.area_count();
                let bad = oracle::partition_violations(&p, &part);
                if bad.is_empty() {
                    clean += 1;
                } else {
                    eprintln!("  c6 {w}x{h} tiles {dx}x{dy}: {}", bad.join("; "));
                }
            }
            Err(e) => eprintln!("  c6 {w}x{h} tiles {dx}x{dy}: {e}"),
        }
    }
    Outcome::new(clean == C6_MAPS, format!("{clean}/{C6_MAPS} maps clean, {areas} areas checked"))
}

// 7. Protocol assertions over every trace recorded by the other criteria.
fn c7() -> Outcome {
    let traces = TRACES.lock().unwrap();
    let broken: Vec<&(String, Vec<String>)> = traces.iter().filter(|(_, v)| !v.is_empty()).collect();
    for (label, v) in broken.iter().take(3) {
        eprintln!("  c7 {label}: {}", v.iter().take(3).cloned().collect::<Vec<_>>().join("; "));
    }
    Outcome::new(
        !traces.is_empty() && broken.is_empty(),
        format!("{} traces checked, {} with violations", traces.len(), broken.len()),
    )
}

const REJECTION_FIXTURE: &str = "\
agent 1 3 3 7 0
agent 2 4 4 6 2

........
........
........
........
####....
####....
####....
####....
";

fn migrate_bodies(events: &[TraceEvent], phase: Phase) -> Vec<(usize, serde_json::Value)> {
    events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Send { envelope, .. } if envelope.kind == Kind::Migrate && envelope.phase == Some(phase) => {
                Some((envelope.round, envelope.body.clone()))
            }
            _ => None,
        })
        .collect()
}

// 8. Two incoming assignments meet at a corner owned by a third party.
fn c8() -> Outcome {
    let p = parse_grid(REJECTION_FIXTURE).unwrap();
    let cfg = RuntimeConfig {
        dx: 4,
        dy: 4,
        ..RuntimeConfig::default()
    };
    let part = divide(&p, 4, 4).unwrap();
    let corner = p.node_at(Coord::new(4, 3)).unwrap();
    let corner_ok = part.area(AreaId(2)).corners.get(&corner) == Some(&BTreeSet::from([AreaId(1), AreaId(3)]));
    let trace = Trace::memory();
    let result = solve(&p, &cfg, &trace);
    let events = trace.events();
    record_trace("c8 rejection fixture", &events, &part, result.is_ok());
    let report = match result {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("solve failed: {e}")),
    };
    let rejected: BTreeSet<(usize, u64)> = migrate_bodies(&events, Phase::Reject)
        .into_iter()
        .flat_map(|(round, body)| {
            body["rejected"]
                .as_array()
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .filter_map(move |a| a.as_u64().map(|a| (round, a)))
        })
        .collect();
    let confirmed: BTreeMap<u64, usize> = migrate_bodies(&events, Phase::Confirm)
        .into_iter()
        .flat_map(|(round, body)| {
            body["migrants"]
                .as_array()
                .cloned()
                .unwrap_or_default()
                .into_iter()
                .filter_map(move |m| m["agent"].as_u64().map(|a| (a, round)))
        })
        .collect();
    let valid = validate(&p, &report.solution).ok;
    let one = rejected.len() == 1;
    let later = rejected
        .iter()
        .all(|(round, agent)| confirmed.get(agent).is_some_and(|&r| r > *round));
    Outcome::new(
        corner_ok && one && later && valid,
        format!(
            "corner {}; rejections {:?}; confirmed (agent, round) {:?}; valid {valid}",
            if corner_ok { "found" } else { "missing" },
            rejected,
            confirmed
        ),
    )
}

const RELAXATION_FIXTURE: &str = "\
agent 1 4 0 9 0
agent 2 6 0 2 0

............
....#.##....
";

fn log_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

// 9. Two migrants must cross in a corridor with one pocket; the horizon is
// too short for both, so one goal is stripped.
fn c9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("relax.txt");
    std::fs::write(&inst, RELAXATION_FIXTURE).unwrap();
    let out = dir.path().join("relax.solution");
    let run = Command::new(mapf_bin())
        .args(["--log", "info", "solve"])
        .arg(&inst)
        .args(["--dx", "4", "--dy", "2", "--F", "0.6", "--out"])
        .arg(&out)
        .output()
        .expect("binary runs");
    let log = String::from_utf8_lossy(&run.stderr);
    let mut orders: Vec<(String, Vec<(u64, u64)>)> = Vec::new();
    let mut stripped: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for line in log.lines() {
        let key = format!("{}/{}", log_field(line, "area").unwrap_or("?"), log_field(line, "round").unwrap_or("?"));
        if line.contains("relax: strip order") {
            let order = log_field(line, "order")
                .unwrap_or("")
                .split(',')
                .filter_map(|e| e.split_once(':'))
                .filter_map(|(a, d)| Some((a.parse().ok()?, d.parse().ok()?)))
                .collect();
            orders.push((key, order));
        } else if line.contains("relax: stripping border goal") {
            if let Some(a) = log_field(line, "agent").and_then(|a| a.parse().ok()) {
                stripped.entry(key).or_default().push(a);
            }
        }
    }
    let farthest_first = orders.iter().all(|(key, order)| {
        let sorted = order.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        let taken = stripped.get(key).map_or(&[][..], |v| v.as_slice());
        let expected: Vec<u64> = order.iter().map(|e| e.0).take(taken.len()).collect();
        sorted && !taken.is_empty() && taken == expected.as_slice()
    });
    let valid = run.status.success()
        && validate_files(&inst, &out.with_extension("solution.json"))
            .map(|(_, r)| r.ok)
            .unwrap_or(false);

    // Same instance in process, for the trace check.
    let p = parse_grid(RELAXATION_FIXTURE).unwrap();
    let cfg = RuntimeConfig {
        dx: 4,
        dy: 2,
        motion: mapf_core::motion::MotionConfig {
            sensitivity: 0.6,
            n_f: 4,
        },
        ..RuntimeConfig::default()
    };
    let in_process = solve_traced("c9 relaxation fixture", &p, &cfg).is_ok();

    Outcome::new(
        !orders.is_empty() && farthest_first && valid && in_process,
        format!(
            "strip orders {:?}, stripped {:?}, valid {valid}",
            orders.iter().map(|(k, o)| format!("{k}: {o:?}")).collect::<Vec<_>>(),
            stripped
        ),
    )
}

// 10. Identical bytes for identical seeds in process; a validating answer
// from two TCP worker processes.
fn c10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut same = true;
    let mut notes = Vec::new();
    let specs = [
        GenerateSpec::open(24, 24, 23, 1),
        GenerateSpec {
            density: 0.2,
            solvable: true,
            ..GenerateSpec::open(24, 24, 30, 2)
        },
    ];
    for (k, spec) in specs.iter().enumerate() {
        let g = generate(spec).unwrap();
        let inst = dir.path().join(format!("det_{k}.txt"));
        std::fs::write(&inst, &g.text).unwrap();
        let bytes: Vec<Option<Vec<u8>>> = (0..2)
            .map(|r| {
                let out = dir.path().join(format!("det_{k}_{r}"));
                let args = solve_args(&[path_str(&inst), "--seed", "7", "--out", path_str(&out)]);
                solve_file(&args).ok().and_then(|s| std::fs::read(s.json).ok())
            })
            .collect();
        let eq = bytes[0].is_some() && bytes[0] == bytes[1];
        same &= eq;
        notes.push(format!("instance {k} identical {eq}"));
    }

    let inst = dir.path().join("det_0.txt");
    let out = dir.path().join("tcp");
    let run = Command::new(mapf_bin())
        .arg("solve")
        .arg(&inst)
        .args(["--transport", "tcp", "--processes", "2", "--out"])
        .arg(&out)
        .output()
        .expect("binary runs");
    let tcp_ok = run.status.success()
        && validate_files(&inst, &out.with_extension("json"))
            .map(|(_, r)| r.ok)
            .unwrap_or(false);
    notes.push(format!(
        "tcp with 2 processes {} ({})",
        if tcp_ok { "valid" } else { "failed" },
        String::from_utf8_lossy(&run.stdout).trim()
    ));
    Outcome::new(same && tcp_ok, notes.join("; "))
}

fn main() {
    // `cargo test -- <filter>` passes arguments; only run when unfiltered or
    // when the filter names this suite.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let names = [
        "end-to-end soundness",
        "reference table at desk scale",
        "border assignment oracle",
        "movement planner oracle",
        "abstract plan oracle",
        "partition invariants",
        "protocol trace assertions",
        "corner rejection scenario",
        "goal relaxation scenario",
        "determinism and tcp",
    ];
    let started = Instant::now();
    let criteria: [(usize, fn() -> Outcome); 9] =
        [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (8, c8), (9, c9), (10, c10)];
    let mut outcomes: BTreeMap<usize, Outcome> = thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|&(n, f)| (n, s.spawn(f))).collect();
        handles
            .into_iter()
            .map(|(n, h)| {
                let o = h
                    .join()
                    .unwrap_or_else(|_| Outcome::new(false, "panicked"));
                (n, o)
            })
            .collect()
    });
    outcomes.insert(7, c7());
    let mut failed = 0;
    for (n, o) in &outcomes {
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {:<32} {}  {}",
            names[n - 1],
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        outcomes.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
