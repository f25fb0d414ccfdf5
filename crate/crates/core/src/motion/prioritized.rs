//! Single-agent paths against a reservation table: a cheap prioritized
//! planner tried before the SAT search, and a pass that re-routes agents one
//! at a time to drop needless moves.

use std::collections::HashSet;

use super::local::Local;

/// Positions and moves already claimed by other agents.
pub(crate) struct Reservations {
    horizon: usize,
    n: usize,
    taken: Vec<bool>,
    moves: HashSet<(usize, usize, usize)>,
}

impl Reservations {
    pub fn new(horizon: usize, n: usize) -> Self {
        Reservations {
            horizon,
            n,
            taken: vec![false; (horizon + 1) * n],
            moves: HashSet::new(),
        }
    }

    pub fn claim(&mut self, path: &[usize]) {
        for (t, &v) in path.iter().enumerate() {
            self.taken[t * self.n + v] = true;
            if t > 0 && path[t - 1] != v {
                self.moves.insert((t, path[t - 1], v));
            }
        }
    }

    fn free(&self, t: usize, v: usize) -> bool {
        !self.taken[t * self.n + v]
    }

    fn swap_free(&self, t: usize, u: usize, v: usize) -> bool {
        !self.moves.contains(&(t, v, u))
    }
}

/// Fewest-moves path for agent `a` that respects `res`. Ties prefer waiting,
/// then the lowest predecessor index.
pub(crate) fn best_path(l: &Local, a: usize, res: &Reservations) -> Option<Vec<usize>> {
    let horizon = res.horizon;
    let n = l.ids.len();
    const INF: u32 = u32::MAX;
    let mut cost = vec![INF; (horizon + 1) * n];
    let start = l.agents[a].start;
    if !l.in_domain(a, start, 0, horizon) {
        return None;
    }
    cost[start] = 0;
    for t in 1..=horizon {
        for v in 0..l.n_in {
            if !l.in_domain(a, v, t, horizon) || !res.free(t, v) {
                continue;
            }
            let mut best = INF;
            let stay = cost[(t - 1) * n + v];
            if stay != INF {
                best = stay;
            }
            for &u in &l.pred[v] {
                let c = cost[(t - 1) * n + u];
                if c != INF && c + 1 < best && res.swap_free(t, u, v) {
                    best = c + 1;
                }
            }
            cost[t * n + v] = best;
        }
    }
    let end = (0..n)
        .filter(|&v| cost[horizon * n + v] != INF)
        .min_by_key(|&v| (cost[horizon * n + v], v))?;
    let mut path = vec![end; horizon + 1];
    let mut v = end;
    for t in (1..=horizon).rev() {
        let c = cost[t * n + v];
        let stay = cost[(t - 1) * n + v];
        let prev = if stay == c {
            v
        } else {
            *l.pred[v]
                .iter()
                .find(|&&u| cost[(t - 1) * n + u] != INF && cost[(t - 1) * n + u] + 1 == c && res.swap_free(t, u, v))
                .expect("cost table is consistent")
        };
        path[t - 1] = prev;
        v = prev;
    }
    Some(path)
}

/// Plans agents one by one: entering agents, then goal agents farthest
/// first, then the rest. Gives up at the first agent with no path.
pub(crate) fn plan(l: &Local, horizon: usize) -> Option<Vec<Vec<usize>>> {
    let na = l.agents.len();
    let mut order: Vec<usize> = (0..na).collect();
    order.sort_by_key(|&a| {
        let ag = &l.agents[a];
        let d = ag.goal.map_or(0, |g| ag.fwd[g]);
        (!l.is_entry(a), ag.goal.is_none(), std::cmp::Reverse(d), a)
    });
    let mut res = Reservations::new(horizon, l.ids.len());
    // Everyone is at their start at t=0; nobody else may step there at t=1
    // before its owner has been planned.
    for a in 0..na {
        res.taken[l.agents[a].start] = true;
    }
    let mut paths = vec![Vec::new(); na];
    for (k, &a) in order.iter().enumerate() {
        let mut local = Reservations {
            horizon,
            n: res.n,
            taken: res.taken.clone(),
            moves: res.moves.clone(),
        };
        for &b in &order[k + 1..] {
            let s = l.agents[b].start;
            if s < l.n_in && horizon >= 1 {
                local.taken[res.n + s] = true;
            }
        }
        let p = best_path(l, a, &local)?;
        res.claim(&p);
        paths[a] = p;
    }
    Some(paths)
}

/// Re-routes each agent with the others fixed until no agent can shed a
/// move. The horizon and every constraint are kept.
pub(crate) fn reduce_moves(l: &Local, paths: &mut [Vec<usize>]) {
    let horizon = paths.first().map_or(0, |p| p.len() - 1);
    let moves = |p: &[usize]| p.windows(2).filter(|w| w[0] != w[1]).count();
    for _ in 0..3 {
        let mut improved = false;
        for a in 0..paths.len() {
            let mut res = Reservations::new(horizon, l.ids.len());
            for (b, p) in paths.iter().enumerate() {
                if b != a {
                    res.claim(p);
                }
            }
            if let Some(p) = best_path(l, a, &res) {
                if moves(&p) < moves(&paths[a]) {
                    paths[a] = p;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}
