//! Optimal border assignment for one area pair.
//!
//! Candidates choose at most one usable border pair each. Mandatory
//! candidates must be served, exactly `limit` candidates are served in total,
//! and the summed distance is minimized. Among optimal answers the one that is
//! lexicographically smallest by (agent id, from-border) wins, where "not
//! served" sorts after every border.
//!
//! When no node appears in two border pairs (always true for grid tiles) the
//! distinctness and no-swap rules reduce to "each border pair carries at most
//! one agent", which is a min-cost flow. Otherwise a branch and bound search
//! checks the rules directly.

use std::collections::{BTreeSet, HashSet};

/// A candidate's usable border pairs: `(pair index, from node, to node, cost)`,
/// sorted by from node.
#[derive(Debug, Clone)]
pub(crate) struct Options {
    pub mandatory: bool,
    pub choices: Vec<(usize, u32, u32, u32)>,
}

/// Per candidate, the chosen pair index or `None`.
pub(crate) type Choice = Vec<Option<usize>>;

pub(crate) fn solve(opts: &[Options], pair_count: usize, limit: usize, disjoint: bool) -> Option<Choice> {
    if disjoint {
        lexmin_flow(opts, pair_count, limit)
    } else {
        branch_and_bound(opts, limit)
    }
}

const MANDATORY_BONUS: i64 = 1 << 24;
const FORCED_BONUS: i64 = 1 << 40;

#[derive(Clone, Copy)]
enum Fix {
    Free,
    Pair(usize),
    Skip,
}

struct Edge {
    to: usize,
    cap: i32,
    cost: i64,
}

struct Network {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    fn add(&mut self, u: usize, v: usize, cost: i64) -> usize {
        let id = self.edges.len();
        self.adj[u].push(id);
        self.edges.push(Edge { to: v, cap: 1, cost });
        self.adj[v].push(id + 1);
        self.edges.push(Edge {
            to: u,
            cap: 0,
            cost: -cost,
        });
        id
    }

    /// Pushes `units` one at a time along cheapest residual paths.
    fn push(&mut self, s: usize, t: usize, units: usize) -> bool {
        let n = self.adj.len();
        for _ in 0..units {
            let mut dist = vec![i64::MAX; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0;
            // Bellman-Ford; the residual graph has no negative cycles.
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == i64::MAX {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let ed = &self.edges[e];
                        if ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] {
                            dist[ed.to] = dist[u] + ed.cost;
                            via[ed.to] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == i64::MAX {
                return false;
            }
            let mut v = t;
            while v != s {
                let e = via[v];
                self.edges[e].cap -= 1;
                self.edges[e ^ 1].cap += 1;
                v = self.edges[e ^ 1].to;
            }
        }
        true
    }
}

/// Cheapest feasible choice under `fixes`, with its total distance.
fn flow_once(opts: &[Options], pair_count: usize, limit: usize, fixes: &[Fix]) -> Option<(u64, Choice)> {
    let k = opts.len();
    let (s, t) = (k + pair_count, k + pair_count + 1);
    let mut net = Network::new(k + pair_count + 2);
    let mut arcs = Vec::new();
    for (i, o) in opts.iter().enumerate() {
        let mut bonus = if o.mandatory { -MANDATORY_BONUS } else { 0 };
        match fixes[i] {
            Fix::Skip => {
                if o.mandatory {
                    return None;
                }
                continue;
            }
            Fix::Pair(_) => bonus -= FORCED_BONUS,
            Fix::Free => {}
        }
        net.add(s, i, bonus);
        for &(p, _, _, cost) in &o.choices {
            if let Fix::Pair(q) = fixes[i] {
                if p != q {
                    continue;
                }
            }
            arcs.push((i, p, net.add(i, k + p, cost as i64)));
        }
    }
    for p in 0..pair_count {
        net.add(k + p, t, 0);
    }
    if !net.push(s, t, limit) {
        return None;
    }
    let mut choice = vec![None; k];
    let mut total = 0u64;
    for (i, p, e) in arcs {
        if net.edges[e].cap == 0 {
            choice[i] = Some(p);
            total += opts[i]
                .choices
                .iter()
                .find(|c| c.0 == p)
                .map_or(0, |c| c.3 as u64);
        }
    }
    for (i, o) in opts.iter().enumerate() {
        let forced = matches!(fixes[i], Fix::Pair(_));
        if (o.mandatory || forced) && choice[i].is_none() {
            return None;
        }
    }
    Some((total, choice))
}

fn lexmin_flow(opts: &[Options], pair_count: usize, limit: usize) -> Option<Choice> {
    let mut fixes = vec![Fix::Free; opts.len()];
    let (best, mut current) = flow_once(opts, pair_count, limit, &fixes)?;
    for i in 0..opts.len() {
        let tries = opts[i]
            .choices
            .iter()
            .map(|c| Fix::Pair(c.0))
            .chain(std::iter::once(Fix::Skip));
        for f in tries {
            // The current optimum already agrees with this choice.
            let agrees = match f {
                Fix::Pair(p) => current[i] == Some(p),
                Fix::Skip => current[i].is_none(),
                Fix::Free => false,
            };
            if agrees {
                fixes[i] = f;
                break;
            }
            fixes[i] = f;
            if let Some((cost, choice)) = flow_once(opts, pair_count, limit, &fixes) {
                if cost == best {
                    current = choice;
                    break;
                }
            }
            fixes[i] = Fix::Free;
        }
    }
    Some(current)
}

struct Search<'a> {
    opts: &'a [Options],
    limit: usize,
    used_from: HashSet<u32>,
    used_to: HashSet<u32>,
    used_moves: BTreeSet<(u32, u32)>,
    picked: Choice,
    count: usize,
    cost: u64,
    best: Option<(u64, Choice)>,
}

impl Search<'_> {
    fn go(&mut self, i: usize) {
        if let Some((b, _)) = &self.best {
            if self.cost >= *b {
                return;
            }
        }
        if self.count > self.limit || self.count + (self.opts.len() - i) < self.limit {
            return;
        }
        if i == self.opts.len() {
            if self.count == self.limit {
                self.best = Some((self.cost, self.picked.clone()));
            }
            return;
        }
        let o = &self.opts[i];
        for &(p, from, to, c) in &o.choices {
            if self.used_from.contains(&from)
                || self.used_to.contains(&to)
                || self.used_moves.contains(&(to, from))
            {
                continue;
            }
            self.used_from.insert(from);
            self.used_to.insert(to);
            self.used_moves.insert((from, to));
            self.picked[i] = Some(p);
            self.count += 1;
            self.cost += c as u64;
            self.go(i + 1);
            self.cost -= c as u64;
            self.count -= 1;
            self.picked[i] = None;
            self.used_moves.remove(&(from, to));
            self.used_to.remove(&to);
            self.used_from.remove(&from);
        }
        if !o.mandatory {
            self.go(i + 1);
        }
    }
}

fn branch_and_bound(opts: &[Options], limit: usize) -> Option<Choice> {
    let mut s = Search {
        opts,
        limit,
        used_from: HashSet::new(),
        used_to: HashSet::new(),
        used_moves: BTreeSet::new(),
        picked: vec![None; opts.len()],
        count: 0,
        cost: 0,
        best: None,
    };
    s.go(0);
    s.best.map(|(_, c)| c)
}
