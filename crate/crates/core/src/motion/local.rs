//! Dense index of one area instance used by the planners.

use std::collections::{HashMap, VecDeque};

use crate::model::{AgentId, NodeId};
use crate::partition::Area;

use super::AreaInstance;

pub(crate) const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct LocalAgent {
    pub id: AgentId,
    pub start: usize,
    pub goal: Option<usize>,
    /// Distance from the start to every local node.
    pub fwd: Vec<usize>,
    /// Distance from every local node to the goal.
    pub bwd: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Local {
    pub ids: Vec<NodeId>,
    /// In-nodes occupy indices `0..n_in`; entry out-nodes follow.
    pub n_in: usize,
    /// Moves into a node, always an in-node.
    pub pred: Vec<Vec<usize>>,
    pub reserved: Vec<bool>,
    pub crowding: bool,
    pub agents: Vec<LocalAgent>,
}

impl Local {
    pub fn build(area: &Area, inst: &AreaInstance) -> Result<Local, String> {
        let mut ids: Vec<NodeId> = area.nodes.keys().copied().collect();
        let n_in = ids.len();
        for &n in inst.incoming.values() {
            if !area.out_nodes.contains_key(&n) {
                return Err(format!("incoming entry {n} is not an out-node"));
            }
            ids.push(n);
        }
        let index: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut succ = vec![Vec::new(); ids.len()];
        let mut pred = vec![Vec::new(); ids.len()];
        for &(from, to, _) in &area.adjacency {
            if let (Some(&u), Some(&v)) = (index.get(&from), index.get(&to)) {
                succ[u].push(v);
                pred[v].push(u);
            }
        }
        let mut reserved = vec![false; n_in];
        for n in &inst.reserved {
            match index.get(n) {
                Some(&i) if i < n_in => reserved[i] = true,
                _ => return Err(format!("reserved node {n} is not in the area")),
            }
        }

        let mut starts: Vec<(AgentId, usize)> = Vec::new();
        for (&a, n) in &inst.residents {
            match index.get(n) {
                Some(&i) if i < n_in => starts.push((a, i)),
                _ => return Err(format!("resident {a} at {n} is outside the area")),
            }
        }
        for (&a, n) in &inst.incoming {
            starts.push((a, index[n]));
        }
        starts.sort();
        let mut agents = Vec::with_capacity(starts.len());
        for (id, start) in starts {
            let goal = match inst.plan_goals.get(&id) {
                None => None,
                Some(g) => match index.get(g) {
                    Some(&i) if i < n_in => Some(i),
                    _ => return Err(format!("goal {g} of {id} is not an in-node")),
                },
            };
            let fwd = bfs(&succ, start);
            let bwd = goal.map(|g| bfs(&pred, g));
            agents.push(LocalAgent {
                id,
                start,
                goal,
                fwd,
                bwd,
            });
        }
        Ok(Local {
            ids,
            n_in,
            pred,
            reserved,
            crowding: inst.crowding_enforced,
            agents,
        })
    }

    pub fn is_entry(&self, a: usize) -> bool {
        self.agents[a].start >= self.n_in
    }

    /// Whether agent `a` may rest on in-node `n` at the final step.
    pub fn end_ok(&self, a: usize, n: usize) -> bool {
        match self.agents[a].goal {
            Some(g) => n == g,
            None => !(self.crowding && self.reserved[n]),
        }
    }

    /// Whether agent `a` can be at `n` at time `t` of a horizon-`horizon` plan.
    pub fn in_domain(&self, a: usize, n: usize, t: usize, horizon: usize) -> bool {
        let ag = &self.agents[a];
        if t == 0 {
            return n == ag.start && (horizon > 0 || (n < self.n_in && self.end_ok(a, n)));
        }
        if n >= self.n_in || ag.fwd[n] > t {
            return false;
        }
        if let Some(bwd) = &ag.bwd {
            if bwd[n] == UNREACHABLE || bwd[n] > horizon - t {
                return false;
            }
        }
        t < horizon || self.end_ok(a, n)
    }

    /// Smallest horizon that every goal distance allows, or `None` when some
    /// goal cannot be reached at all.
    pub fn lower_bound(&self) -> Option<usize> {
        let mut lb = 0;
        for ag in &self.agents {
            if ag.start >= self.n_in {
                lb = lb.max(1);
            }
            if let Some(g) = ag.goal {
                let d = ag.fwd[g];
                if d == UNREACHABLE {
                    return None;
                }
                lb = lb.max(d);
            }
        }
        Some(lb)
    }
}

fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; adj.len()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v] == UNREACHABLE {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}
