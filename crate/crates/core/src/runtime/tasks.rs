//! Who works and who calls whom in a round, derived from the track messages.

use std::collections::BTreeSet;

use crate::partition::{AreaId, SolverId};

use super::messages::TrackMessage;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tasks {
    pub active: BTreeSet<SolverId>,
    /// Pairs `(low, high)` where this solver owns `low` and calls the owner
    /// of `high`.
    pub send: BTreeSet<(AreaId, AreaId)>,
    /// Pairs where this solver owns `high` and is called.
    pub recv: BTreeSet<(AreaId, AreaId)>,
    /// Pairs with both areas owned by this solver.
    pub local: BTreeSet<(AreaId, AreaId)>,
}

impl Tasks {
    /// Pairs this solver negotiates as host.
    pub fn hosted(&self) -> BTreeSet<(AreaId, AreaId)> {
        self.recv.union(&self.local).copied().collect()
    }

    pub fn all_pairs(&self) -> BTreeSet<(AreaId, AreaId)> {
        self.send.iter().chain(&self.recv).chain(&self.local).copied().collect()
    }
}

/// Every pair of areas some agent wants to cross between.
pub fn pending_pairs(msgs: &[TrackMessage]) -> BTreeSet<(AreaId, AreaId)> {
    msgs.iter()
        .flat_map(|m| &m.pending)
        .filter_map(|p| p.next.map(|q| (p.area.min(q), p.area.max(q))))
        .collect()
}

/// Computes the tasks of solver `me`. Every solver gets the same `active`
/// set because it is derived from the same messages.
pub fn determine_tasks(msgs: &[TrackMessage], owner: impl Fn(AreaId) -> SolverId, me: SolverId) -> Tasks {
    let mut t = Tasks::default();
    t.active.extend(msgs.iter().filter(|m| m.has_work).map(|m| m.solver));
    for (lo, hi) in pending_pairs(msgs) {
        let (u, v) = (owner(lo), owner(hi));
        t.active.insert(u);
        t.active.insert(v);
        if u == v {
            if u == me {
                t.local.insert((lo, hi));
            }
        } else if u == me {
            t.send.insert((lo, hi));
        } else if v == me {
            t.recv.insert((lo, hi));
        }
    }
    t
}
