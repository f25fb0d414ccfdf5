use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{AgentId, GlobalSolution, NodeId, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    BadEdge,
    VertexConflict,
    SwapConflict,
    WrongStart,
    GoalMissed,
    LengthMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    pub agents: Vec<AgentId>,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.ok {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            let agents: Vec<String> = v.agents.iter().map(|a| a.to_string()).collect();
            let nodes: Vec<String> = v.nodes.iter().map(|n| n.to_string()).collect();
            writeln!(
                f,
                "t={} {:?} agents=[{}] nodes=[{}]",
                v.step,
                v.kind,
                agents.join(","),
                nodes.join(",")
            )?;
        }
        Ok(())
    }
}

/// Checks a solution against the movement rules: every step is a wait or an
/// edge, no two agents share a node, no two agents swap, paths start at the
/// starts and end at the goals, and all paths span `makespan + 1` steps.
pub fn validate(p: &Problem, s: &GlobalSolution) -> ValidationReport {
    let mut out = Vec::new();
    let mut push = |step, kind, agents: Vec<AgentId>, nodes: Vec<NodeId>| {
        out.push(Violation {
            step,
            kind,
            agents,
            nodes,
        })
    };

    for a in p.agents() {
        if !s.paths.contains_key(&a) {
            push(0, ViolationKind::LengthMismatch, vec![a], vec![]);
        }
    }
    for (&a, path) in &s.paths {
        let Some(start) = p.start(a) else {
            push(0, ViolationKind::WrongStart, vec![a], vec![]);
            continue;
        };
        if path.len() != s.makespan + 1 {
            push(path.len(), ViolationKind::LengthMismatch, vec![a], vec![]);
        }
        match path.first() {
            None => continue,
            Some(&n0) if n0 != start => {
                push(0, ViolationKind::WrongStart, vec![a], vec![n0, start])
            }
            _ => {}
        }
        for (t, w) in path.windows(2).enumerate() {
            let known = p.coord(w[0]).is_some() && p.coord(w[1]).is_some();
            if !known || (w[0] != w[1] && !p.has_edge(w[0], w[1])) {
                push(t + 1, ViolationKind::BadEdge, vec![a], vec![w[0], w[1]]);
            }
        }
        if let (Some(g), Some(&last)) = (p.goal(a), path.last()) {
            if last != g {
                push(path.len() - 1, ViolationKind::GoalMissed, vec![a], vec![last, g]);
            }
        }
    }

    let horizon = s.paths.values().map(Vec::len).min().unwrap_or(0);
    for t in 0..horizon {
        let mut at: BTreeMap<NodeId, Vec<AgentId>> = BTreeMap::new();
        for (&a, path) in &s.paths {
            at.entry(path[t]).or_default().push(a);
        }
        for (n, agents) in at {
            if agents.len() > 1 {
                push(t, ViolationKind::VertexConflict, agents, vec![n]);
            }
        }
        if t == 0 {
            continue;
        }
        let mut moves: HashMap<(NodeId, NodeId), AgentId> = HashMap::new();
        for (&a, path) in &s.paths {
            if path[t - 1] != path[t] {
                moves.insert((path[t - 1], path[t]), a);
            }
        }
        for (&(u, v), &a) in &moves {
            if let Some(&b) = moves.get(&(v, u)) {
                if a < b {
                    push(t, ViolationKind::SwapConflict, vec![a, b], vec![u, v]);
                }
            }
        }
    }

    out.sort_by(|x, y| (x.step, x.kind, &x.agents).cmp(&(y.step, y.kind, &y.agents)));
    ValidationReport {
        ok: out.is_empty(),
        violations: out,
    }
}
