//! Wire envelopes and their bodies.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::abstract_plan::AbstractPlan;
use crate::model::{AgentId, NodeId};
use crate::motion::MovementPlan;
use crate::negotiate::{BorderAssignment, PairOutcome, Tier};
use crate::partition::{AreaId, SolverId};

use super::RuntimeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Track,
    Migrate,
    Aggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Phase {
    Negotiate,
    Reject,
    Confirm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<Phase>,
    pub round: usize,
    pub from: SolverId,
    pub to: SolverId,
    /// Set on responses.
    #[serde(default)]
    pub reply: bool,
    pub body: serde_json::Value,
}

impl Envelope {
    pub fn new<B: Serialize>(kind: Kind, phase: Option<Phase>, round: usize, from: SolverId, to: SolverId, body: &B) -> Self {
        Envelope {
            kind,
            phase,
            round,
            from,
            to,
            reply: false,
            body: serde_json::to_value(body).expect("message bodies serialize"),
        }
    }

    pub fn response<B: Serialize>(&self, body: &B) -> Self {
        Envelope {
            kind: self.kind,
            phase: self.phase,
            round: self.round,
            from: self.to,
            to: self.from,
            reply: true,
            body: serde_json::to_value(body).expect("message bodies serialize"),
        }
    }

    pub fn body<B: DeserializeOwned>(&self) -> Result<B, RuntimeError> {
        serde_json::from_value(self.body.clone())
            .map_err(|e| RuntimeError::Protocol(format!("bad {:?} body from {}: {e}", self.kind, self.from)))
    }
}

/// An agent that is not done yet, with the area it wants to enter next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pending {
    pub agent: AgentId,
    pub area: AreaId,
    pub next: Option<AreaId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "message", rename_all = "kebab-case")]
pub enum Failure {
    Unsolvable(String),
    Timeout(String),
    Motion(String),
    Protocol(String),
}

impl From<Failure> for RuntimeError {
    fn from(f: Failure) -> Self {
        match f {
            Failure::Unsolvable(m) => RuntimeError::Unsolvable(m),
            Failure::Timeout(_) => RuntimeError::Timeout,
            Failure::Motion(m) => RuntimeError::Unsolvable(m),
            Failure::Protocol(m) => RuntimeError::Protocol(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackMessage {
    pub solver: SolverId,
    pub round: usize,
    pub pending: Vec<Pending>,
    pub has_work: bool,
    /// Longest remaining abstract plan among this solver's agents.
    #[serde(default)]
    pub longest: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiateRequest {
    pub pair: (AreaId, AreaId),
    pub tiers: Vec<Tier>,
    /// Nodes of the caller's area where an agent must end the round.
    #[serde(default)]
    pub parked: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiateResponse {
    pub pair: (AreaId, AreaId),
    pub outcome: PairOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectBody {
    pub pair: (AreaId, AreaId),
    pub rejected: Vec<AgentId>,
}

/// A migrant that made it to its from-border and changes owner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrantRecord {
    pub agent: AgentId,
    /// Already advanced: starts with the area being entered.
    pub plan: AbstractPlan,
    /// The from-border, an out-node of the area being entered.
    pub node: NodeId,
    pub goal: Option<NodeId>,
    pub assignment: BorderAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmBody {
    pub pair: (AreaId, AreaId),
    pub migrants: Vec<MigrantRecord>,
}

/// Everything one solver planned, for the aggregator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPlans {
    pub round: usize,
    pub plans: Vec<MovementPlan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateBody {
    pub solver: SolverId,
    pub rounds: Vec<RoundPlans>,
}
