//! Protocol assertions over a recorded message trace.

use std::collections::{BTreeMap, BTreeSet};

use mapf_core::model::{AgentId, NodeId};
use mapf_core::negotiate::BorderAssignment;
use mapf_core::partition::{AreaId, Partition, SolverId};
use mapf_core::runtime::{Kind, Phase, TraceEvent};

fn pair_of(body: &serde_json::Value) -> Option<(u32, u32)> {
    let p = body.get("pair")?.as_array()?;
    Some((p.first()?.as_u64()? as u32, p.get(1)?.as_u64()? as u32))
}

/// Every violation found in `events`. `complete` demands that every pair
/// that started negotiating also finished confirmation.
pub fn violations(events: &[TraceEvent], part: &Partition, complete: bool) -> Vec<String> {
    let mut bad = Vec::new();
    let n = part.solver_count() as u32;
    let mut events: Vec<&TraceEvent> = events.iter().collect();
    events.sort_by_key(|e| e.seq());

    let mut tracks: BTreeMap<(SolverId, usize), BTreeSet<SolverId>> = BTreeMap::new();
    let mut barriers: BTreeSet<(SolverId, usize)> = BTreeSet::new();
    let mut phases: BTreeMap<(usize, (u32, u32)), Vec<(Phase, bool)>> = BTreeMap::new();
    let mut settled: BTreeMap<usize, BTreeSet<((AreaId, AreaId), BorderAssignment)>> = BTreeMap::new();

    for e in events {
        match e {
            TraceEvent::Send { envelope: env, .. } => match env.kind {
                Kind::Track => {
                    tracks.entry((env.to, env.round)).or_default().insert(env.from);
                }
                Kind::Migrate => {
                    if !barriers.contains(&(env.from, env.round)) {
                        bad.push(format!("{} sent migrate of round {} before its barrier", env.from, env.round));
                    }
                    let upward = env.from < env.to;
                    if upward == env.reply {
                        bad.push(format!(
                            "{} {} from {} to {} in round {}",
                            if env.reply { "reply" } else { "call" },
                            phase_name(env.phase),
                            env.from,
                            env.to,
                            env.round
                        ));
                    }
                    match (env.phase, pair_of(&env.body)) {
                        (Some(ph), Some(pair)) => phases.entry((env.round, pair)).or_default().push((ph, env.reply)),
                        _ => bad.push(format!("migrate envelope without phase or pair in round {}", env.round)),
                    }
                }
                Kind::Aggregate => {}
            },
            TraceEvent::Barrier { solver, round, .. } => {
                let got = tracks.get(&(*solver, *round)).map_or(0, |s| s.len());
                if got != n as usize {
                    bad.push(format!("{solver} passed barrier {round} with {got} of {n} track messages"));
                }
                if !barriers.insert((*solver, *round)) {
                    bad.push(format!("{solver} passed barrier {round} twice"));
                }
            }
            TraceEvent::Settled { round, assignments, .. } => {
                settled.entry(*round).or_default().extend(assignments.iter().copied());
            }
        }
    }

    let full = [
        (Phase::Negotiate, false),
        (Phase::Negotiate, true),
        (Phase::Reject, false),
        (Phase::Reject, true),
        (Phase::Confirm, false),
        (Phase::Confirm, true),
    ];
    for ((round, pair), seen) in &phases {
        let ok = if complete {
            seen.as_slice() == full
        } else {
            full.starts_with(seen)
        };
        if !ok {
            bad.push(format!("pair {pair:?} in round {round}: phases {seen:?}"));
        }
    }

    for (round, list) in &settled {
        let mut agents: BTreeSet<AgentId> = BTreeSet::new();
        let mut into: BTreeSet<NodeId> = BTreeSet::new();
        let mut out_of: BTreeSet<NodeId> = BTreeSet::new();
        for (pair, a) in list {
            if !agents.insert(a.agent) {
                bad.push(format!("agent {} assigned twice in round {round}", a.agent));
            }
            let (Some(from), Some(to)) = (part.area_of(a.from_border), part.area_of(a.to_border)) else {
                bad.push(format!("assignment of {} uses unknown nodes", a.agent));
                continue;
            };
            if (from.min(to), from.max(to)) != *pair {
                bad.push(format!("assignment of {} does not cross pair {pair:?}", a.agent));
            }
            if !into.insert(a.to_border) {
                bad.push(format!("two agents enter {} through {} in round {round}", to, a.to_border));
            }
            if !out_of.insert(a.from_border) {
                bad.push(format!("two agents leave {} from {} in round {round}", from, a.from_border));
            }
        }
    }
    bad
}

fn phase_name(p: Option<Phase>) -> &'static str {
    match p {
        Some(Phase::Negotiate) => "NEGOTIATE",
        Some(Phase::Reject) => "REJECT",
        Some(Phase::Confirm) => "CONFIRM",
        None => "-",
    }
}
