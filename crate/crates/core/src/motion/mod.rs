//! Collision-free movement inside one area for one round.
//!
//! The planner looks for the smallest horizon `T` at which every agent with a
//! plan goal can stand on it, entering agents step in at `t = 1`, and nobody
//! collides. Each horizon is tried with a prioritized planner first and a
//! complete SAT search second, so the reported `T` is always minimal.

mod local;
mod prioritized;
mod sat;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, info};

use crate::model::{AgentId, NodeId};
use crate::partition::{Area, AreaId};

use local::Local;
use sat::SatResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Horizon sensitivity `F`.
    pub sensitivity: f64,
    /// Free nodes needed before reserved entry nodes are protected.
    pub n_f: usize,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            sensitivity: 2.0,
            n_f: 4,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotionError {
    #[error("no movement plan within horizon {0}")]
    Infeasible(usize),
    #[error("movement planning ran out of time")]
    Timeout,
    #[error("malformed area instance: {0}")]
    BadInstance(String),
    #[error("planner produced an invalid plan: {0}")]
    Internal(String),
}

/// One area in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaInstance {
    pub area: AreaId,
    pub round: usize,
    /// Agents inside the area at `t = 0`.
    pub residents: BTreeMap<AgentId, NodeId>,
    /// Agents entering this round, placed on out-nodes at `t = 0`.
    pub incoming: BTreeMap<AgentId, NodeId>,
    /// Agents leaving after this round, with their from-border.
    pub outgoing: BTreeMap<AgentId, NodeId>,
    /// Where agents must stand at the end of the plan.
    pub plan_goals: BTreeMap<AgentId, NodeId>,
    /// Entry nodes of next round's arrivals.
    pub reserved: BTreeSet<NodeId>,
    pub crowding_enforced: bool,
}

impl AreaInstance {
    pub fn new(area: AreaId, round: usize) -> Self {
        AreaInstance {
            area,
            round,
            residents: BTreeMap::new(),
            incoming: BTreeMap::new(),
            outgoing: BTreeMap::new(),
            plan_goals: BTreeMap::new(),
            reserved: BTreeSet::new(),
            crowding_enforced: false,
        }
    }

    pub fn agent_count(&self) -> usize {
        self.residents.len() + self.incoming.len()
    }

    pub fn position(&self, a: AgentId) -> Option<NodeId> {
        self.residents
            .get(&a)
            .or_else(|| self.incoming.get(&a))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovementPlan {
    pub horizon: usize,
    /// Node per step `0..=horizon` for every agent of the instance.
    pub steps: BTreeMap<AgentId, Vec<NodeId>>,
}

impl MovementPlan {
    pub fn moves(&self) -> usize {
        self.steps
            .values()
            .map(|p| p.windows(2).filter(|w| w[0] != w[1]).count())
            .sum()
    }
}

/// `floor((sqrt(n_a) + 1) * 2 * F)`.
pub fn horizon(n_a: usize, sensitivity: f64) -> usize {
    (((n_a as f64).sqrt() + 1.0) * 2.0 * sensitivity).floor() as usize
}

/// True when the area keeps at least `n_f` free nodes, so that reserved
/// entry nodes can be kept clear.
pub fn crowding_guard(n_a: usize, n_r: usize, n_i: usize, n_f: usize) -> bool {
    n_a as i64 - n_r as i64 - n_i as i64 >= n_f as i64
}

fn feasible_at(l: &Local, t: usize, deadline: Option<Instant>) -> Result<Option<Vec<Vec<usize>>>, MotionError> {
    if let Some(p) = prioritized::plan(l, t) {
        return Ok(Some(p));
    }
    match sat::solve(l, t, deadline) {
        SatResult::Plan(p) => Ok(Some(p)),
        SatResult::Infeasible => Ok(None),
        SatResult::Timeout => Err(MotionError::Timeout),
    }
}

/// Plans `inst` with the smallest feasible horizon up to `h_m`.
pub fn plan_movements(
    area: &Area,
    inst: &AreaInstance,
    h_m: usize,
    deadline: Option<Instant>,
) -> Result<MovementPlan, MotionError> {
    let l = Local::build(area, inst).map_err(MotionError::BadInstance)?;
    if l.agents.is_empty() {
        return Ok(MovementPlan {
            horizon: 0,
            steps: BTreeMap::new(),
        });
    }
    let lb = l.lower_bound().ok_or(MotionError::Infeasible(h_m))?;
    if lb > h_m {
        return Err(MotionError::Infeasible(h_m));
    }
    // Feasibility is monotone in the horizon (everyone can wait at the end),
    // so after a short linear probe a binary search finds the minimum.
    let mut found = None;
    let linear_end = (lb + 2).min(h_m);
    for t in lb..=linear_end {
        if let Some(p) = feasible_at(&l, t, deadline)? {
            found = Some(p);
            break;
        }
    }
    if found.is_none() && linear_end < h_m {
        let Some(p) = feasible_at(&l, h_m, deadline)? else {
            return Err(MotionError::Infeasible(h_m));
        };
        let (mut lo, mut hi) = (linear_end + 1, h_m);
        let mut best = p;
        while lo < hi {
            let mid = (lo + hi) / 2;
            match feasible_at(&l, mid, deadline)? {
                Some(p) => {
                    best = p;
                    hi = mid;
                }
                None => lo = mid + 1,
            }
        }
        found = Some(best);
    }
    let mut paths = found.ok_or(MotionError::Infeasible(h_m))?;
    prioritized::reduce_moves(&l, &mut paths);
    let plan = MovementPlan {
        horizon: paths[0].len() - 1,
        steps: l
            .agents
            .iter()
            .zip(paths)
            .map(|(ag, p)| (ag.id, p.into_iter().map(|i| l.ids[i]).collect()))
            .collect(),
    };
    validate_plan(area, inst, &plan).map_err(MotionError::Internal)?;
    Ok(plan)
}

/// Outcome of planning with goal relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relaxed {
    pub plan: MovementPlan,
    /// The instance actually planned, without stripped goals.
    pub instance: AreaInstance,
    /// Migrants whose goals were removed, in removal order.
    pub stripped: Vec<AgentId>,
}

/// Plans `inst`, removing outgoing agents' border goals one at a time
/// (farthest from its border first) until a plan exists.
pub fn relax_and_retry(
    area: &Area,
    inst: &AreaInstance,
    h_m: usize,
    deadline: Option<Instant>,
) -> Result<Relaxed, MotionError> {
    let coord = |n: NodeId| area.coord(n).expect("instance nodes belong to the area");
    let mut order: Vec<(u32, AgentId)> = inst
        .outgoing
        .iter()
        .map(|(&a, &b)| {
            let at = inst.position(a).expect("outgoing agents are in the instance");
            (coord(at).manhattan(coord(b)), a)
        })
        .collect();
    order.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut cur = inst.clone();
    let mut stripped = Vec::new();
    let listed: Vec<String> = order.iter().map(|(d, a)| format!("{a}:{d}")).collect();
    let mut queue = order.into_iter();
    loop {
        match plan_movements(area, &cur, h_m, deadline) {
            Ok(plan) => {
                return Ok(Relaxed {
                    plan,
                    instance: cur,
                    stripped,
                })
            }
            Err(MotionError::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
        if stripped.is_empty() && !listed.is_empty() {
            info!(area = %inst.area, round = inst.round, order = %listed.join(","), "relax: strip order");
        }
        let Some((d, a)) = queue.next() else {
            debug!(area = %inst.area, round = inst.round, "nothing left to relax");
            return Err(MotionError::Infeasible(h_m));
        };
        info!(area = %inst.area, round = inst.round, agent = %a, distance = d, "relax: stripping border goal");
        cur.outgoing.remove(&a);
        cur.plan_goals.remove(&a);
        stripped.push(a);
    }
}

/// Checks a plan against the movement rules of its instance.
pub fn validate_plan(area: &Area, inst: &AreaInstance, plan: &MovementPlan) -> Result<(), String> {
    let horizon = plan.horizon;
    let expected: BTreeSet<AgentId> = inst.residents.keys().chain(inst.incoming.keys()).copied().collect();
    let got: BTreeSet<AgentId> = plan.steps.keys().copied().collect();
    if expected != got {
        return Err("plan covers a different agent set".into());
    }
    let moves: BTreeSet<(NodeId, NodeId)> = area.adjacency.iter().map(|&(a, b, _)| (a, b)).collect();
    for (&a, path) in &plan.steps {
        if path.len() != horizon + 1 {
            return Err(format!("agent {a}: path length {}", path.len()));
        }
        if Some(path[0]) != inst.position(a) {
            return Err(format!("agent {a}: wrong start"));
        }
        for t in 1..=horizon {
            if !area.contains(path[t]) {
                return Err(format!("agent {a}: outside the area at t={t}"));
            }
            let (u, v) = (path[t - 1], path[t]);
            if u != v && !moves.contains(&(u, v)) {
                return Err(format!("agent {a}: illegal move {u}->{v} at t={t}"));
            }
        }
        if inst.incoming.contains_key(&a) && horizon == 0 {
            return Err(format!("agent {a}: entering agent never steps in"));
        }
        let end = path[horizon];
        match inst.plan_goals.get(&a) {
            Some(&g) if g != end => return Err(format!("agent {a}: misses its goal")),
            None if inst.crowding_enforced && inst.reserved.contains(&end) => {
                return Err(format!("agent {a}: rests on reserved node {end}"))
            }
            _ => {}
        }
    }
    for t in 0..=horizon {
        let mut seen: HashMap<NodeId, AgentId> = HashMap::new();
        for (&a, path) in &plan.steps {
            if let Some(b) = seen.insert(path[t], a) {
                return Err(format!("agents {b} and {a} share {} at t={t}", path[t]));
            }
        }
        if t == 0 {
            continue;
        }
        let mut step: HashMap<(NodeId, NodeId), AgentId> = HashMap::new();
        for (&a, path) in &plan.steps {
            if path[t - 1] != path[t] {
                step.insert((path[t - 1], path[t]), a);
            }
        }
        for (&(u, v), &a) in &step {
            if let Some(&b) = step.get(&(v, u)) {
                return Err(format!("agents {a} and {b} swap at t={t}"));
            }
        }
    }
    Ok(())
}
