//! Border negotiation between two linked areas, corner blocking and
//! rejection of colliding assignments.
//!
//! The area that computes the assignment for a pair is the *host*; it is the
//! higher-id area of the pair. "Outgoing" and "incoming" are always relative
//! to the host.

mod assign;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{AgentId, Coord, NodeId};
use crate::partition::{Area, AreaId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Leaving the host area.
    Outgoing,
    /// Entering the host area.
    Incoming,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub agent: AgentId,
    pub node: NodeId,
    pub at: Coord,
    /// Remaining hops of the agent's abstract plan.
    pub tier: usize,
    pub side: Side,
    pub mandatory: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tier {
    pub remaining: usize,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BorderAssignment {
    pub agent: AgentId,
    /// In the agent's current area.
    pub from_border: NodeId,
    /// In the area it moves to.
    pub to_border: NodeId,
    pub distance: u32,
}

/// Counters for one pair negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiationState {
    pub low: AreaId,
    pub high: AreaId,
    pub n_l: usize,
    pub n_bi: usize,
    pub n_bo: usize,
    pub n_ai: usize,
    pub n_ao: usize,
    pub n_i: usize,
    pub n_o: usize,
    pub limit: usize,
}

/// Host nodes blocked for the rest of a round. `from` blocks the node as the
/// start of an outgoing crossing, `to` as the end of an incoming one.
/// `parked` holds nodes on either side where an agent has to stand at the
/// end of the round; no crossing may start there.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostBlocks {
    pub from: BTreeSet<NodeId>,
    pub to: BTreeSet<NodeId>,
    #[serde(default)]
    pub parked: BTreeSet<NodeId>,
}

impl HostBlocks {
    /// Whether a crossing may start at the host node `h` of a pair.
    pub fn can_leave(&self, h: NodeId) -> bool {
        !self.from.contains(&h) && !self.parked.contains(&h)
    }

    /// Whether a crossing from remote node `r` into host node `h` is allowed.
    pub fn can_enter(&self, h: NodeId, r: NodeId) -> bool {
        !self.to.contains(&h) && !self.parked.contains(&r)
    }
}

/// One border pair seen from the host: `(host node, coord, remote node, coord)`.
pub type BorderPair = (NodeId, Coord, NodeId, Coord);

/// Groups candidates by remaining hops, longest first. Inside a tier host-side
/// candidates come first, then by agent id.
pub fn build_tiers(mut cands: Vec<Candidate>) -> Vec<Tier> {
    cands.sort_by(|a, b| {
        b.tier
            .cmp(&a.tier)
            .then(a.side.cmp(&b.side))
            .then(a.agent.cmp(&b.agent))
    });
    let mut tiers: Vec<Tier> = Vec::new();
    for c in cands {
        match tiers.last_mut() {
            Some(t) if t.remaining == c.tier => t.candidates.push(c),
            _ => tiers.push(Tier {
                remaining: c.tier,
                candidates: vec![c],
            }),
        }
    }
    tiers
}

/// Walks the tiers, marking each side of a tier mandatory when it fits the
/// remaining capacity on that side, and returns the admitted candidates.
///
/// Besides the per-side check, a part is only made mandatory when all
/// mandatory candidates together still fit in `max(n_ai, n_ao)`; otherwise a
/// full outgoing tier plus a full incoming tier could exceed what the border
/// pairs can carry once swaps are excluded.
pub fn admit(
    tiers: &[Tier],
    low: AreaId,
    high: AreaId,
    n_l: usize,
    n_bi: usize,
    n_bo: usize,
) -> (NegotiationState, Vec<Candidate>) {
    let n_ai = n_l - n_bi.min(n_l);
    let n_ao = n_l - n_bo.min(n_l);
    let cap_total = n_ai.max(n_ao);
    let (mut n_i, mut n_o, mut n_mand) = (0usize, 0usize, 0usize);
    let mut admitted = Vec::new();
    for tier in tiers {
        if n_o >= n_ao && n_i >= n_ai {
            break;
        }
        for side in [Side::Outgoing, Side::Incoming] {
            let part: Vec<&Candidate> = tier.candidates.iter().filter(|c| c.side == side).collect();
            if part.is_empty() {
                continue;
            }
            let (count, avail) = match side {
                Side::Outgoing => (&mut n_o, n_ao),
                Side::Incoming => (&mut n_i, n_ai),
            };
            let mandatory =
                part.len() <= avail.saturating_sub(*count) && n_mand + part.len() <= cap_total;
            *count += part.len();
            if mandatory {
                n_mand += part.len();
            }
            admitted.extend(part.into_iter().map(|c| Candidate {
                mandatory,
                ..c.clone()
            }));
        }
    }
    let limit = (n_i.min(n_ai) + n_o.min(n_ao)).min(cap_total);
    let state = NegotiationState {
        low,
        high,
        n_l,
        n_bi,
        n_bo,
        n_ai,
        n_ao,
        n_i,
        n_o,
        limit,
    };
    (state, admitted)
}

/// Blocked incoming and outgoing border pairs of one pair: `(n_bi, n_bo)`.
pub fn blocked_counts(pairs: &[BorderPair], blocks: &HostBlocks) -> (usize, usize) {
    let n_bi = pairs.iter().filter(|p| !blocks.can_enter(p.0, p.2)).count();
    let n_bo = pairs.iter().filter(|p| !blocks.can_leave(p.0)).count();
    (n_bi, n_bo)
}

/// Optimal assignment of exactly `limit` admitted candidates to unblocked
/// border pairs, or `None` if the constraints cannot be met.
pub fn assign_borders(
    cands: &[Candidate],
    pairs: &[BorderPair],
    blocks: &HostBlocks,
    limit: usize,
) -> Option<Vec<BorderAssignment>> {
    if limit == 0 {
        return cands.iter().all(|c| !c.mandatory).then(Vec::new);
    }
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by_key(|&i| cands[i].agent);
    let opts: Vec<assign::Options> = order
        .iter()
        .map(|&i| {
            let c = &cands[i];
            let mut choices: Vec<(usize, u32, u32, u32)> = pairs
                .iter()
                .enumerate()
                .filter_map(|(k, &(h, hc, r, rc))| match c.side {
                    Side::Outgoing if blocks.can_leave(h) => {
                        Some((k, h.0, r.0, c.at.manhattan(hc)))
                    }
                    Side::Incoming if blocks.can_enter(h, r) => {
                        Some((k, r.0, h.0, c.at.manhattan(rc)))
                    }
                    _ => None,
                })
                .collect();
            choices.sort_by_key(|&(_, from, _, _)| from);
            assign::Options {
                mandatory: c.mandatory,
                choices,
            }
        })
        .collect();
    let mut seen = BTreeSet::new();
    let disjoint = pairs.iter().all(|p| seen.insert(p.0) && seen.insert(p.2));
    let choice = assign::solve(&opts, pairs.len(), limit, disjoint)?;
    let mut out: Vec<BorderAssignment> = order
        .iter()
        .zip(choice)
        .filter_map(|(&i, pick)| {
            let k = pick?;
            let c = &cands[i];
            let (h, hc, r, rc) = pairs[k];
            Some(match c.side {
                Side::Outgoing => BorderAssignment {
                    agent: c.agent,
                    from_border: h,
                    to_border: r,
                    distance: c.at.manhattan(hc),
                },
                Side::Incoming => BorderAssignment {
                    agent: c.agent,
                    from_border: r,
                    to_border: h,
                    distance: c.at.manhattan(rc),
                },
            })
        })
        .collect();
    out.sort();
    Some(out)
}

/// Blocks host corners used by `assignments` for the rest of the round.
pub fn block_corners(assignments: &[BorderAssignment], host: &Area, blocks: &mut HostBlocks) {
    for a in assignments {
        if host.contains(a.from_border) {
            if host.is_corner(a.from_border) {
                blocks.from.insert(a.from_border);
            }
        } else if host.is_corner(a.to_border) {
            blocks.to.insert(a.to_border);
        }
    }
}

/// Result of one pair negotiation at the host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub state: NegotiationState,
    pub assignments: Vec<BorderAssignment>,
    /// False when the assignment problem had no solution this round.
    pub solved: bool,
}

/// Runs the whole host-side negotiation for one pair and updates `blocks`.
/// `pairs` are oriented from the host.
pub fn negotiate_pair(
    host: &Area,
    remote: AreaId,
    pairs: &[BorderPair],
    candidates: Vec<Candidate>,
    blocks: &mut HostBlocks,
) -> PairOutcome {
    let (low, high) = (host.id.min(remote), host.id.max(remote));
    let tiers = build_tiers(candidates);
    let (n_bi, n_bo) = blocked_counts(pairs, blocks);
    let (state, admitted) = admit(&tiers, low, high, pairs.len(), n_bi, n_bo);
    match assign_borders(&admitted, pairs, blocks, state.limit) {
        Some(assignments) => {
            block_corners(&assignments, host, blocks);
            PairOutcome {
                state,
                assignments,
                solved: true,
            }
        }
        None => PairOutcome {
            state,
            assignments: Vec::new(),
            solved: false,
        },
    }
}

/// One assignment touching an area, with where it was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ledgered {
    pub pair: (AreaId, AreaId),
    /// Computed by the solver that owns the area being checked.
    pub local: bool,
    pub assignment: BorderAssignment,
}

/// Agents to reject so that, within `area`, incoming assignments have
/// distinct targets and outgoing ones distinct sources. Locally computed
/// assignments win over remote ones; among equals the lowest pair wins.
pub fn detect_rejections(area: &Area, entries: &[Ledgered]) -> BTreeSet<AgentId> {
    let mut by_node: BTreeMap<(bool, NodeId), Vec<&Ledgered>> = BTreeMap::new();
    for e in entries {
        let a = e.assignment;
        if area.contains(a.to_border) {
            by_node.entry((true, a.to_border)).or_default().push(e);
        } else if area.contains(a.from_border) {
            by_node.entry((false, a.from_border)).or_default().push(e);
        }
    }
    let mut rejected = BTreeSet::new();
    for mut group in by_node.into_values() {
        if group.len() < 2 {
            continue;
        }
        group.sort_by_key(|e| (!e.local, e.pair, e.assignment.agent));
        rejected.extend(group[1..].iter().map(|e| e.assignment.agent));
    }
    rejected
}
