//! Stitches per-round area plans into one global solution.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{validate, AgentId, GlobalSolution, NodeId, Problem};
use crate::motion::MovementPlan;

use super::RuntimeError;

/// Each round lasts as long as its longest area plan; shorter plans and
/// agents without a plan wait in place. The result is validated.
pub fn aggregate(p: &Problem, rounds: &BTreeMap<usize, Vec<MovementPlan>>) -> Result<GlobalSolution, RuntimeError> {
    let mut paths: BTreeMap<AgentId, Vec<NodeId>> = p.starts().iter().map(|(&a, &s)| (a, vec![s])).collect();
    for (&round, plans) in rounds {
        let t_r = plans.iter().map(|pl| pl.horizon).max().unwrap_or(0);
        let mut seen = BTreeSet::new();
        for plan in plans {
            for (&a, steps) in &plan.steps {
                if !seen.insert(a) {
                    return Err(RuntimeError::Internal(format!("agent {a} planned twice in round {round}")));
                }
                let path = paths
                    .get_mut(&a)
                    .ok_or_else(|| RuntimeError::Internal(format!("unknown agent {a} in round {round}")))?;
                if path.last() != steps.first() {
                    return Err(RuntimeError::Internal(format!(
                        "agent {a} starts round {round} away from where it ended"
                    )));
                }
                path.extend_from_slice(&steps[1..]);
                let last = *path.last().expect("paths are never empty");
                path.resize(path.len() + t_r - plan.horizon, last);
            }
        }
        for (a, path) in paths.iter_mut() {
            if !seen.contains(a) {
                let last = *path.last().expect("paths are never empty");
                path.resize(path.len() + t_r, last);
            }
        }
    }
    let sol = GlobalSolution::from_paths(paths).map_err(|e| RuntimeError::Internal(e.to_string()))?;
    let report = validate(p, &sol);
    if !report.ok {
        return Err(RuntimeError::Internal(format!("stitched solution is invalid: {report}")));
    }
    Ok(sol)
}
