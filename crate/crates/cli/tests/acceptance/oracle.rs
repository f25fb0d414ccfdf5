//! Brute-force references written without reusing the solver's algorithms.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use mapf_core::model::{AgentId, Coord, NodeId, Problem};
use mapf_core::motion::AreaInstance;
use mapf_core::negotiate::{BorderPair, Candidate, HostBlocks, Side};
use mapf_core::partition::{Area, AreaId, Partition};

/// Exhaustive border assignment: every admitted candidate takes nothing or
/// one usable pair. Returns the minimum total distance of an assignment of
/// exactly `limit` candidates, or `None` when none exists.
pub fn min_assignment(cands: &[Candidate], pairs: &[BorderPair], blocks: &HostBlocks, limit: usize) -> Option<u32> {
    // (from, to, cost) options per candidate.
    let opts: Vec<Vec<(NodeId, NodeId, u32)>> = cands
        .iter()
        .map(|c| {
            pairs
                .iter()
                .filter_map(|&(h, hc, r, rc)| match c.side {
                    Side::Outgoing if !blocks.from.contains(&h) && !blocks.parked.contains(&h) => {
                        Some((h, r, manhattan(c.at, hc)))
                    }
                    Side::Incoming if !blocks.to.contains(&h) && !blocks.parked.contains(&r) => {
                        Some((r, h, manhattan(c.at, rc)))
                    }
                    _ => None,
                })
                .collect()
        })
        .collect();
    let mut best = None;
    let mut pick: Vec<Option<(NodeId, NodeId, u32)>> = Vec::new();
    enumerate(cands, &opts, &mut pick, limit, &mut best);
    best
}

fn enumerate(
    cands: &[Candidate],
    opts: &[Vec<(NodeId, NodeId, u32)>],
    pick: &mut Vec<Option<(NodeId, NodeId, u32)>>,
    limit: usize,
    best: &mut Option<u32>,
) {
    let i = pick.len();
    if i == cands.len() {
        let chosen: Vec<(NodeId, NodeId, u32)> = pick.iter().flatten().copied().collect();
        if chosen.len() != limit {
            return;
        }
        if cands.iter().zip(pick.iter()).any(|(c, p)| c.mandatory && p.is_none()) {
            return;
        }
        let froms: HashSet<NodeId> = chosen.iter().map(|c| c.0).collect();
        let tos: HashSet<NodeId> = chosen.iter().map(|c| c.1).collect();
        if froms.len() != chosen.len() || tos.len() != chosen.len() {
            return;
        }
        let swap = chosen
            .iter()
            .any(|a| chosen.iter().any(|b| a.0 == b.1 && a.1 == b.0));
        if swap {
            return;
        }
        let total = chosen.iter().map(|c| c.2).sum();
        if best.map_or(true, |b| total < b) {
            *best = Some(total);
        }
        return;
    }
    pick.push(None);
    enumerate(cands, opts, pick, limit, best);
    pick.pop();
    for &o in &opts[i] {
        pick.push(Some(o));
        enumerate(cands, opts, pick, limit, best);
        pick.pop();
    }
}

fn manhattan(a: Coord, b: Coord) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

/// Smallest horizon `T <= h_m` with a legal joint plan, by breadth-first
/// search over joint positions. Moves follow the grid; agents may only
/// step onto nodes of the area.
pub fn min_horizon(p: &Problem, area: &Area, inst: &AreaInstance, h_m: usize) -> Option<usize> {
    let agents: Vec<AgentId> = inst.residents.keys().chain(inst.incoming.keys()).copied().collect();
    let start: Vec<NodeId> = agents.iter().map(|a| inst.position(*a).unwrap()).collect();
    let inside = |n: NodeId| area.nodes.contains_key(&n);
    let done = |s: &[NodeId]| {
        s.iter().zip(&agents).all(|(&n, a)| {
            inside(n)
                && match inst.plan_goals.get(a) {
                    Some(&g) => n == g,
                    None => !(inst.crowding_enforced && inst.reserved.contains(&n)),
                }
        })
    };
    let mut level: BTreeSet<Vec<NodeId>> = BTreeSet::from([start]);
    for t in 0..=h_m {
        if level.iter().any(|s| done(s)) {
            return Some(t);
        }
        let mut next = BTreeSet::new();
        for s in &level {
            let choices: Vec<Vec<NodeId>> = s
                .iter()
                .map(|&n| {
                    let mut c: Vec<NodeId> = p.neighbors(n).map(|(_, m)| m).filter(|&m| inside(m)).collect();
                    if inside(n) {
                        c.push(n);
                    }
                    c
                })
                .collect();
            successors(s, &choices, &mut Vec::new(), &mut next);
        }
        level = next;
    }
    None
}

fn successors(cur: &[NodeId], choices: &[Vec<NodeId>], acc: &mut Vec<NodeId>, out: &mut BTreeSet<Vec<NodeId>>) {
    let i = acc.len();
    if i == cur.len() {
        out.insert(acc.clone());
        return;
    }
    for &n in &choices[i] {
        if acc.contains(&n) {
            continue;
        }
        // No swap with an earlier agent.
        if (0..i).any(|j| acc[j] == cur[i] && cur[j] == n) {
            continue;
        }
        acc.push(n);
        successors(cur, choices, acc, out);
        acc.pop();
    }
}

/// Checks a returned plan against the same rules as [`min_horizon`].
pub fn plan_is_legal(p: &Problem, area: &Area, inst: &AreaInstance, steps: &BTreeMap<AgentId, Vec<NodeId>>, horizon: usize) -> bool {
    let agents: Vec<AgentId> = inst.residents.keys().chain(inst.incoming.keys()).copied().collect();
    if steps.len() != agents.len() {
        return false;
    }
    for a in &agents {
        let Some(path) = steps.get(a) else { return false };
        if path.len() != horizon + 1 || path[0] != inst.position(*a).unwrap() {
            return false;
        }
        for w in path.windows(2) {
            if !area.nodes.contains_key(&w[1]) || (w[0] != w[1] && !p.has_edge(w[0], w[1])) {
                return false;
            }
        }
        let last = path[horizon];
        let ok_end = match inst.plan_goals.get(a) {
            Some(&g) => last == g,
            None => !(inst.crowding_enforced && inst.reserved.contains(&last)),
        };
        if !ok_end || !area.nodes.contains_key(&last) {
            return false;
        }
    }
    for t in 0..=horizon {
        let at: HashSet<NodeId> = agents.iter().map(|a| steps[a][t]).collect();
        if at.len() != agents.len() {
            return false;
        }
        if t > 0 {
            for a in &agents {
                for b in &agents {
                    if a != b && steps[a][t - 1] == steps[b][t] && steps[b][t - 1] == steps[a][t] {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Hop distance between two areas over an undirected edge list.
pub fn hop_distance(edges: &[(AreaId, AreaId)], from: AreaId, to: AreaId) -> Option<usize> {
    let mut dist = BTreeMap::from([(from, 0usize)]);
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        if a == to {
            return Some(dist[&a]);
        }
        let d = dist[&a];
        for &(x, y) in edges {
            let other = if x == a {
                y
            } else if y == a {
                x
            } else {
                continue;
            };
            if !dist.contains_key(&other) {
                dist.insert(other, d + 1);
                queue.push_back(other);
            }
        }
    }
    None
}

/// Structural checks of a partition against the grid it was built from.
/// Returns a description of every violated property.
pub fn partition_violations(p: &Problem, part: &Partition) -> Vec<String> {
    let mut bad = Vec::new();

    // Node partition.
    let mut tile_of: BTreeMap<NodeId, u32> = BTreeMap::new();
    for s in &part.subproblems {
        for &n in &s.nodes {
            if tile_of.insert(n, s.id.0).is_some() {
                bad.push(format!("node {n} in two subproblems"));
            }
            if !s.bounds.contains(p.coord(n).unwrap()) {
                bad.push(format!("node {n} outside the bounds of {}", s.id));
            }
        }
        let on_lines: BTreeSet<NodeId> = s
            .nodes
            .iter()
            .copied()
            .filter(|&n| s.bounds.on_edge(p.coord(n).unwrap()))
            .collect();
        if on_lines != s.borders {
            bad.push(format!("borders of {} are not the nodes on its bounding lines", s.id));
        }
    }
    let mut area_of: BTreeMap<NodeId, AreaId> = BTreeMap::new();
    for a in &part.areas {
        for &n in a.nodes.keys() {
            if area_of.insert(n, a.id).is_some() {
                bad.push(format!("node {n} in two areas"));
            }
            if tile_of.get(&n) != Some(&a.owner.0) {
                bad.push(format!("node {n} of {} lies outside its owner's tile", a.id));
            }
        }
    }
    if tile_of.len() != p.node_count() || area_of.len() != p.node_count() {
        bad.push(format!(
            "{} nodes, {} in tiles, {} in areas",
            p.node_count(),
            tile_of.len(),
            area_of.len()
        ));
    }

    // Id ordering.
    for (i, a) in part.areas.iter().enumerate() {
        if a.id.0 as usize != i + 1 {
            bad.push(format!("area at index {i} has id {}", a.id));
        }
    }
    for w in part.areas.windows(2) {
        if w[0].owner > w[1].owner {
            bad.push(format!("{} of {} precedes {} of {}", w[0].id, w[0].owner, w[1].id, w[1].owner));
        }
    }

    for a in &part.areas {
        // Connectivity inside the area, and maximality within the tile.
        let first = *a.nodes.keys().next().unwrap();
        let mut seen = BTreeSet::from([first]);
        let mut stack = vec![first];
        while let Some(n) = stack.pop() {
            for (_, m) in p.neighbors(n) {
                if a.nodes.contains_key(&m) && seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        if seen.len() != a.nodes.len() {
            bad.push(format!("{} is not connected", a.id));
        }
        let mut outside: BTreeSet<NodeId> = BTreeSet::new();
        let mut foreign: BTreeMap<NodeId, BTreeSet<AreaId>> = BTreeMap::new();
        let mut cross: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for &n in a.nodes.keys() {
            for (_, m) in p.neighbors(n) {
                if a.nodes.contains_key(&m) {
                    continue;
                }
                outside.insert(m);
                if tile_of[&m] == a.owner.0 {
                    bad.push(format!("{} touches another area of its own tile at {m}", a.id));
                }
                foreign.entry(n).or_default().insert(area_of[&m]);
                cross.insert((n, m));
            }
        }
        // o-node soundness.
        let outs: BTreeSet<NodeId> = a.out_nodes.keys().copied().collect();
        if outs != outside {
            bad.push(format!("out-nodes of {} differ from its outer neighbours", a.id));
        }
        for o in &outs {
            let owners = part.areas.iter().filter(|b| b.id != a.id && b.nodes.contains_key(o)).count();
            if owners != 1 {
                bad.push(format!("out-node {o} of {} lies in {owners} other areas", a.id));
            }
        }
        for &(n1, n2, d) in &a.adjacency {
            let legal = a.nodes.contains_key(&n2)
                && (a.nodes.contains_key(&n1) || a.out_nodes.contains_key(&n1))
                && p.has_edge(n1, n2)
                && p.neighbors(n1).any(|(dir, m)| m == n2 && dir == d);
            if !legal {
                bad.push(format!("bad adjacency ({n1},{n2}) in {}", a.id));
            }
        }
        // Links seen from this side, and their mirror image.
        let links: BTreeSet<(NodeId, NodeId)> = a.links.iter().map(|l| (l.inner, l.outer)).collect();
        if links != cross {
            bad.push(format!("links of {} differ from its cross-tile adjacencies", a.id));
        }
        for l in &a.links {
            let other = part.area(l.area);
            if !other.links.iter().any(|m| m.inner == l.outer && m.outer == l.inner && m.area == a.id) {
                bad.push(format!("link {}-{} of {} has no mirror", l.inner, l.outer, a.id));
            }
        }
        // Corners: linked to at least two other areas.
        let corners: BTreeMap<NodeId, BTreeSet<AreaId>> =
            foreign.into_iter().filter(|(_, s)| s.len() >= 2).collect();
        if corners != a.corners {
            bad.push(format!("corners of {} differ", a.id));
        }
    }

    // Area-level link graph: one entry per linked pair, counting border pairs.
    let mut expected: BTreeMap<(AreaId, AreaId), usize> = BTreeMap::new();
    for (u, v) in p.edges().into_iter().filter(|(u, v)| u < v) {
        let (a, b) = (area_of[&u], area_of[&v]);
        if a != b {
            *expected.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let got: BTreeMap<(AreaId, AreaId), usize> =
        part.links.pairs.iter().map(|l| ((l.low, l.high), l.borders.len())).collect();
    if got != expected {
        bad.push("link graph differs from cross-area adjacencies".into());
    }
    for l in &part.links.pairs {
        if !part.links.linked(l.high, l.low) || part.links.n_l(l.high, l.low) != part.links.n_l(l.low, l.high) {
            bad.push(format!("link {}-{} is not symmetric", l.low, l.high));
        }
    }
    bad
}
