//! Fixed-horizon SAT encoding of one area instance.
//!
//! `x(a, n, t)` says agent `a` is at local node `n` at step `t`. Variables
//! exist only where the node is reachable from the start by `t` and the goal
//! is still reachable in the steps left.

use std::collections::HashMap;
use std::time::Instant;

use batsat::{lbool, BasicSolver, Lit, SolverInterface, Var};

use super::local::Local;

pub(crate) enum SatResult {
    Plan(Vec<Vec<usize>>),
    Infeasible,
    Timeout,
}

fn at_most_one(s: &mut BasicSolver, lits: &[Lit]) {
    if lits.len() <= 5 {
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                s.add_clause_reuse(&mut vec![!lits[i], !lits[j]]);
            }
        }
        return;
    }
    // Sequential counter.
    let aux: Vec<Lit> = (0..lits.len() - 1)
        .map(|_| Lit::new(s.new_var_default(), true))
        .collect();
    s.add_clause_reuse(&mut vec![!lits[0], aux[0]]);
    for i in 1..lits.len() - 1 {
        s.add_clause_reuse(&mut vec![!lits[i], aux[i]]);
        s.add_clause_reuse(&mut vec![!aux[i - 1], aux[i]]);
        s.add_clause_reuse(&mut vec![!lits[i], !aux[i - 1]]);
    }
    let k = lits.len() - 1;
    s.add_clause_reuse(&mut vec![!lits[k], !aux[k - 1]]);
}

pub(crate) fn solve(l: &Local, horizon: usize, deadline: Option<Instant>) -> SatResult {
    let mut s = BasicSolver::default();
    if let Some(d) = deadline {
        s.cb_mut().set_stop(move || Instant::now() >= d);
    }
    let na = l.agents.len();
    let nn = l.ids.len();
    // vars[a][t] = (node, var) pairs
    let mut vars: Vec<Vec<Vec<(usize, Var)>>> = vec![Vec::with_capacity(horizon + 1); na];
    let mut lookup: Vec<HashMap<usize, Var>> = Vec::new();
    for (a, slots) in vars.iter_mut().enumerate() {
        for t in 0..=horizon {
            let dom: Vec<(usize, Var)> = (0..nn)
                .filter(|&n| l.in_domain(a, n, t, horizon))
                .map(|n| (n, s.new_var_default()))
                .collect();
            if dom.is_empty() {
                return SatResult::Infeasible;
            }
            slots.push(dom);
        }
    }
    for slots in &vars {
        for dom in slots {
            lookup.push(dom.iter().copied().collect());
        }
    }
    let slot = |a: usize, t: usize| a * (horizon + 1) + t;

    let mut movers: HashMap<(usize, usize, usize), Var> = HashMap::new();
    let mut by_node: Vec<Vec<Lit>> = vec![Vec::new(); nn];
    for a in 0..na {
        for t in 0..=horizon {
            let dom = &vars[a][t];
            let lits: Vec<Lit> = dom.iter().map(|&(_, v)| Lit::new(v, true)).collect();
            s.add_clause_reuse(&mut lits.clone());
            at_most_one(&mut s, &lits);
            if t == 0 {
                continue;
            }
            let prev = &lookup[slot(a, t - 1)];
            for &(n, v) in dom {
                let mut clause = vec![Lit::new(v, false)];
                if let Some(&pv) = prev.get(&n) {
                    clause.push(Lit::new(pv, true));
                }
                for &m in &l.pred[n] {
                    if let Some(&pv) = prev.get(&m) {
                        clause.push(Lit::new(pv, true));
                        if m < l.n_in {
                            let w = *movers
                                .entry((t, m, n))
                                .or_insert_with(|| s.new_var_default());
                            s.add_clause_reuse(&mut vec![
                                Lit::new(pv, false),
                                Lit::new(v, false),
                                Lit::new(w, true),
                            ]);
                        }
                    }
                }
                s.add_clause_reuse(&mut clause);
            }
        }
    }
    for t in 1..=horizon {
        for bucket in by_node.iter_mut() {
            bucket.clear();
        }
        for a in 0..na {
            for &(n, v) in &vars[a][t] {
                by_node[n].push(Lit::new(v, true));
            }
        }
        for lits in &by_node {
            if lits.len() > 1 {
                at_most_one(&mut s, lits);
            }
        }
    }
    let mut keys: Vec<_> = movers.keys().copied().collect();
    keys.sort();
    for (t, u, v) in keys {
        if u < v {
            if let Some(&back) = movers.get(&(t, v, u)) {
                let fwd = movers[&(t, u, v)];
                s.add_clause_reuse(&mut vec![Lit::new(fwd, false), Lit::new(back, false)]);
            }
        }
    }

    let r = s.solve_limited(&[]);
    if r == lbool::FALSE {
        return SatResult::Infeasible;
    }
    if r != lbool::TRUE {
        return SatResult::Timeout;
    }
    let paths = vars
        .iter()
        .map(|slots| {
            slots
                .iter()
                .map(|dom| {
                    dom.iter()
                        .find(|&&(_, v)| s.value_var(v) == lbool::TRUE)
                        .map(|&(n, _)| n)
                        .expect("exactly one position per step")
                })
                .collect()
        })
        .collect();
    SatResult::Plan(paths)
}
