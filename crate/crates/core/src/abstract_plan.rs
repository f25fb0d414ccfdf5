//! Area-level routing over the link graph.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::AgentId;
use crate::partition::{AreaId, LinkGraph, Placement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbstractError {
    #[error("unknown area {0}")]
    UnknownArea(AreaId),
    #[error("agent {agent} cannot reach goal area {goal} from {start}")]
    Unreachable {
        agent: AgentId,
        start: AreaId,
        goal: AreaId,
    },
}

/// Areas still to traverse; the first entry is the current area.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractPlan {
    pub areas: Vec<AreaId>,
}

impl AbstractPlan {
    pub fn stay(area: AreaId) -> Self {
        AbstractPlan { areas: vec![area] }
    }

    /// Hops left.
    pub fn remaining(&self) -> usize {
        self.areas.len() - 1
    }

    pub fn current(&self) -> AreaId {
        self.areas[0]
    }

    pub fn next(&self) -> Option<AreaId> {
        self.areas.get(1).copied()
    }

    pub fn goal(&self) -> AreaId {
        *self.areas.last().expect("plans are never empty")
    }

    /// The plan after crossing into the next area.
    pub fn advanced(&self) -> AbstractPlan {
        assert!(self.areas.len() > 1, "advancing a finished plan");
        AbstractPlan {
            areas: self.areas[1..].to_vec(),
        }
    }
}

/// Hop distances to `goal` from every area that can reach it.
fn distances_to(
    nbrs: &BTreeMap<AreaId, Vec<AreaId>>,
    goal: AreaId,
) -> HashMap<AreaId, usize> {
    let mut dist = HashMap::from([(goal, 0)]);
    let mut queue = VecDeque::from([goal]);
    while let Some(a) = queue.pop_front() {
        let d = dist[&a];
        for &b in &nbrs[&a] {
            if !dist.contains_key(&b) {
                dist.insert(b, d + 1);
                queue.push_back(b);
            }
        }
    }
    dist
}

/// Follows decreasing distance, taking the smallest area id at each tie.
fn walk(
    nbrs: &BTreeMap<AreaId, Vec<AreaId>>,
    dist: &HashMap<AreaId, usize>,
    start: AreaId,
    h_a: usize,
) -> Option<AbstractPlan> {
    let mut d = *dist.get(&start)?;
    if d > h_a {
        return None;
    }
    let mut areas = vec![start];
    let mut cur = start;
    while d > 0 {
        cur = *nbrs[&cur]
            .iter()
            .find(|b| dist.get(b) == Some(&(d - 1)))
            .expect("bfs layers are contiguous");
        areas.push(cur);
        d -= 1;
    }
    Some(AbstractPlan { areas })
}

/// Shortest area sequence from `start` to `goal` with at most `h_a` hops.
pub fn abstract_plan(
    links: &LinkGraph,
    start: AreaId,
    goal: AreaId,
    h_a: usize,
) -> Result<Option<AbstractPlan>, AbstractError> {
    for a in [start, goal] {
        if !links.areas.contains(&a) {
            return Err(AbstractError::UnknownArea(a));
        }
    }
    let nbrs = links.neighbors();
    Ok(walk(&nbrs, &distances_to(&nbrs, goal), start, h_a))
}

/// Plans for every agent; goal-less agents stay put. One unreachable goal
/// fails the whole call.
pub fn plan_all(
    placements: &BTreeMap<AgentId, Placement>,
    links: &LinkGraph,
) -> Result<BTreeMap<AgentId, AbstractPlan>, AbstractError> {
    let nbrs = links.neighbors();
    let h_a = links.areas.len();
    let mut cache: HashMap<AreaId, HashMap<AreaId, usize>> = HashMap::new();
    let mut out = BTreeMap::new();
    for (&agent, pl) in placements {
        let plan = match pl.goal_area {
            None => AbstractPlan::stay(pl.area),
            Some(goal) => {
                for a in [pl.area, goal] {
                    if !links.areas.contains(&a) {
                        return Err(AbstractError::UnknownArea(a));
                    }
                }
                let dist = cache
                    .entry(goal)
                    .or_insert_with(|| distances_to(&nbrs, goal));
                walk(&nbrs, dist, pl.area, h_a).ok_or(AbstractError::Unreachable {
                    agent,
                    start: pl.area,
                    goal,
                })?
            }
        };
        out.insert(agent, plan);
    }
    Ok(out)
}
