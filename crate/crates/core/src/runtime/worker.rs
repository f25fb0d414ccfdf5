//! The per-solver round loop.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tracing::{debug, info, warn};

use crate::abstract_plan::{abstract_plan, AbstractError, AbstractPlan};
use crate::model::{AgentId, Coord, GlobalSolution, NodeId, Problem};
use crate::motion::{crowding_guard, horizon, relax_and_retry, AreaInstance, MotionError, MovementPlan};
use crate::negotiate::{
    build_tiers, detect_rejections, negotiate_pair, BorderAssignment, BorderPair, Candidate, HostBlocks, Ledgered,
    PairOutcome, Side,
};
use crate::partition::{Area, AreaId, Partition, SolverId};

use super::aggregate::aggregate;
use super::messages::{
    AggregateBody, ConfirmBody, Envelope, Failure, Kind, MigrantRecord, NegotiateRequest, NegotiateResponse, Pending,
    Phase, RejectBody, RoundPlans, TrackMessage,
};
use super::tasks::{determine_tasks, Tasks};
use super::trace::{Trace, TraceEvent};
use super::transport::Transport;
use super::{RuntimeConfig, RuntimeError};

type Pair = (AreaId, AreaId);

/// What a solver knows about one of its agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub node: NodeId,
    pub goal: Option<NodeId>,
    /// Starts with the area the agent is in, or is entering.
    pub plan: AbstractPlan,
    /// Waiting on an out-node of `plan.current()`, to step in at `t = 1`.
    pub entering: bool,
}

impl AgentState {
    pub fn done(&self) -> bool {
        !self.entering && self.plan.remaining() == 0 && self.goal.is_none_or(|g| g == self.node)
    }
}

fn failure_of(e: RuntimeError) -> Failure {
    match e {
        RuntimeError::Unsolvable(m) => Failure::Unsolvable(m),
        RuntimeError::Timeout => Failure::Timeout("timed out".into()),
        RuntimeError::Stalled(m) => Failure::Timeout(m),
        other => Failure::Protocol(other.to_string()),
    }
}

/// Adds confirmed migrants to the instance they enter next round.
pub fn confirm_apply(
    area: &Area,
    next: &mut AreaInstance,
    records: &[MigrantRecord],
    rejected: &BTreeSet<AgentId>,
) -> Result<(), RuntimeError> {
    for r in records {
        if rejected.contains(&r.agent) {
            return Err(RuntimeError::Protocol(format!("{} confirmed after being rejected", r.agent)));
        }
        if r.plan.current() != area.id || !area.out_nodes.contains_key(&r.node) {
            return Err(RuntimeError::Protocol(format!(
                "{} cannot enter {} from {}",
                r.agent, area.id, r.node
            )));
        }
        if next.incoming.values().any(|&n| n == r.node) || next.position(r.agent).is_some() {
            return Err(RuntimeError::Protocol(format!("{} collides on entry into {}", r.agent, area.id)));
        }
        next.incoming.insert(r.agent, r.node);
    }
    Ok(())
}

struct Mailbox<T> {
    transport: T,
    stash: Vec<Envelope>,
    trace: Trace,
}

impl<T: Transport> Mailbox<T> {
    fn send(&self, env: Envelope) -> Result<(), RuntimeError> {
        self.trace.record(|seq| TraceEvent::Send {
            seq,
            envelope: env.clone(),
        });
        self.transport.send(env)
    }

    fn take(&mut self, until: Instant, what: &str, pred: impl Fn(&Envelope) -> bool) -> Result<Envelope, RuntimeError> {
        if let Some(i) = self.stash.iter().position(&pred) {
            return Ok(self.stash.remove(i));
        }
        loop {
            let left = until.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(RuntimeError::Stalled(format!("solver {} waiting for {what}", self.transport.id())));
            }
            match self.transport.recv(left)? {
                Some(e) if pred(&e) => return Ok(e),
                Some(e) => self.stash.push(e),
                None => {}
            }
        }
    }

    fn take_n(
        &mut self,
        n: usize,
        until: Instant,
        what: &str,
        pred: impl Fn(&Envelope) -> bool,
    ) -> Result<Vec<Envelope>, RuntimeError> {
        (0..n).map(|_| self.take(until, what, &pred)).collect()
    }
}

/// What a solver hands back when the loop ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerOutput {
    pub rounds: usize,
    /// Only the aggregating solver has one.
    pub solution: Option<GlobalSolution>,
}

pub struct Worker<T> {
    id: SolverId,
    problem: Arc<Problem>,
    part: Arc<Partition>,
    cfg: RuntimeConfig,
    deadline: Instant,
    mail: Mailbox<T>,
    agents: BTreeMap<AgentId, AgentState>,
    /// Instances per round, with their plans once made.
    instances: BTreeMap<usize, BTreeMap<AreaId, AreaInstance>>,
    plans: BTreeMap<usize, Vec<MovementPlan>>,
    failure: Option<Failure>,
    round_cap: usize,
}

impl<T: Transport> Worker<T> {
    pub fn new(
        transport: T,
        problem: Arc<Problem>,
        part: Arc<Partition>,
        cfg: RuntimeConfig,
        deadline: Instant,
        trace: Trace,
    ) -> Self {
        Worker {
            id: transport.id(),
            problem,
            part,
            cfg,
            deadline,
            mail: Mailbox {
                transport,
                stash: Vec::new(),
                trace,
            },
            agents: BTreeMap::new(),
            instances: BTreeMap::new(),
            plans: BTreeMap::new(),
            failure: None,
            round_cap: usize::MAX,
        }
    }

    fn coord(&self, n: NodeId) -> Coord {
        self.problem.coord(n).expect("partition nodes come from the problem")
    }

    fn owns(&self, a: AreaId) -> bool {
        self.part.owner(a) == self.id
    }

    fn my_areas(&self) -> Vec<AreaId> {
        self.part.subproblem(self.id).areas.clone()
    }

    /// Abstract plans for the agents starting in this solver's areas.
    fn init(&mut self) {
        let h_a = self.part.area_count();
        let robots = self.part.subproblem(self.id).robots.clone();
        for (a, start) in robots {
            let area = self.part.area_of(start).expect("robots start inside areas");
            let goal = self.problem.goal(a);
            let plan = match goal.map(|g| self.part.area_of(g).expect("goals lie inside areas")) {
                None => Ok(Some(AbstractPlan::stay(area))),
                Some(ga) => abstract_plan(&self.part.links, area, ga, h_a),
            };
            match plan {
                Ok(Some(plan)) => {
                    self.agents.insert(
                        a,
                        AgentState {
                            id: a,
                            node: start,
                            goal,
                            plan,
                            entering: false,
                        },
                    );
                }
                Ok(None) => {
                    let goal = goal.and_then(|g| self.part.area_of(g)).expect("checked above");
                    let e = AbstractError::Unreachable { agent: a, start: area, goal };
                    self.failure.get_or_insert(Failure::Unsolvable(e.to_string()));
                }
                Err(e) => {
                    self.failure.get_or_insert(Failure::Unsolvable(e.to_string()));
                }
            }
        }
    }

    pub fn run(mut self) -> Result<WorkerOutput, RuntimeError> {
        self.init();
        let out = self.rounds();
        self.mail.trace.flush();
        out
    }

    fn rounds(&mut self) -> Result<WorkerOutput, RuntimeError> {
        for round in 0.. {
            if self.failure.is_none() && Instant::now() >= self.deadline {
                self.failure = Some(Failure::Timeout(format!("solver {} out of time", self.id)));
            }
            let msgs = self.barrier(round)?;
            if let Some(f) = msgs.iter().find_map(|m| m.failure.clone()) {
                debug!(solver = %self.id, round, ?f, "aborting");
                return Err(f.into());
            }
            if round == 0 {
                let longest = msgs.iter().map(|m| m.longest).max().unwrap_or(0);
                self.round_cap = self
                    .cfg
                    .max_rounds
                    .unwrap_or(4 * self.part.area_count() * longest.max(1));
            }
            let tasks = determine_tasks(&msgs, |a| self.part.owner(a), self.id);
            if tasks.active.is_empty() {
                let solution = self.finish(round)?;
                return Ok(WorkerOutput {
                    rounds: round,
                    solution,
                });
            }
            if round >= self.round_cap {
                return Err(RuntimeError::RoundLimit(self.round_cap));
            }
            if tasks.active.contains(&self.id) {
                if let Err(e) = self.run_round(round, &tasks) {
                    // Peers learn about it at the next barrier instead of waiting there.
                    warn!(solver = %self.id, round, error = %e, "round failed");
                    self.failure.get_or_insert(failure_of(e));
                }
            }
        }
        unreachable!("the round loop only exits by returning")
    }

    fn track_message(&self, round: usize) -> TrackMessage {
        let pending: Vec<Pending> = self
            .agents
            .values()
            .filter(|s| !s.done())
            .map(|s| Pending {
                agent: s.id,
                area: s.plan.current(),
                next: s.plan.next(),
            })
            .collect();
        TrackMessage {
            solver: self.id,
            round,
            has_work: !pending.is_empty(),
            pending,
            longest: self.agents.values().map(|s| s.plan.remaining()).max().unwrap_or(0),
            failure: self.failure.clone(),
        }
    }

    fn barrier(&mut self, round: usize) -> Result<Vec<TrackMessage>, RuntimeError> {
        let msg = self.track_message(round);
        let n = self.mail.transport.solver_count();
        for to in 1..=n as u32 {
            self.mail
                .send(Envelope::new(Kind::Track, None, round, self.id, SolverId(to), &msg))?;
        }
        let until = Instant::now().max(self.deadline) + self.cfg.barrier_timeout;
        let envs = self.mail.take_n(n, until, "track messages", |e| {
            e.kind == Kind::Track && e.round == round
        })?;
        let mut msgs: Vec<TrackMessage> = envs.iter().map(|e| e.body()).collect::<Result<_, _>>()?;
        msgs.sort_by_key(|m| m.solver);
        if msgs.windows(2).any(|w| w[0].solver == w[1].solver) {
            return Err(RuntimeError::Protocol(format!("duplicate track message in round {round}")));
        }
        self.mail.trace.record(|seq| TraceEvent::Barrier {
            seq,
            solver: self.id,
            round,
        });
        Ok(msgs)
    }

    fn rpc_deadline(&self) -> Instant {
        Instant::now() + self.cfg.rpc_timeout
    }

    /// This solver's migration candidates in `area` heading for `other`.
    /// The side is relative to the pair's host, the higher area.
    fn candidates(&self, pair: Pair, area: AreaId) -> Vec<Candidate> {
        let other = if area == pair.0 { pair.1 } else { pair.0 };
        let side = if area == pair.1 { Side::Outgoing } else { Side::Incoming };
        self.agents
            .values()
            .filter(|s| s.plan.current() == area && s.plan.next() == Some(other))
            .map(|s| Candidate {
                agent: s.id,
                node: s.node,
                at: self.coord(s.node),
                tier: s.plan.remaining(),
                side,
                mandatory: false,
            })
            .collect()
    }

    /// Goal nodes of agents that finish in `area` this round.
    fn parked(&self, area: AreaId) -> Vec<NodeId> {
        self.agents
            .values()
            .filter(|s| s.plan.current() == area && s.plan.remaining() == 0)
            .filter_map(|s| s.goal)
            .collect()
    }

    fn border_pairs(&self, pair: Pair) -> Vec<BorderPair> {
        let link = self.part.links.get(pair.0, pair.1).expect("pending pairs are linked");
        link.borders
            .iter()
            .map(|&(lo, hi)| (hi, self.coord(hi), lo, self.coord(lo)))
            .collect()
    }

    fn migrate_env<B: Serialize>(&self, phase: Phase, round: usize, pair: Pair, body: &B) -> Envelope {
        Envelope::new(Kind::Migrate, Some(phase), round, self.id, self.part.owner(pair.1), body)
    }

    fn requests(&mut self, phase: Phase, round: usize, n: usize) -> Result<Vec<Envelope>, RuntimeError> {
        let until = self.rpc_deadline();
        self.mail.take_n(n, until, "migrate requests", |e| {
            e.kind == Kind::Migrate && e.phase == Some(phase) && e.round == round && !e.reply
        })
    }

    fn responses(&mut self, phase: Phase, round: usize, n: usize) -> Result<Vec<Envelope>, RuntimeError> {
        let until = self.rpc_deadline();
        self.mail.take_n(n, until, "migrate responses", |e| {
            e.kind == Kind::Migrate && e.phase == Some(phase) && e.round == round && e.reply
        })
    }

    fn check_pair(set: &BTreeSet<Pair>, pair: Pair, what: &str) -> Result<(), RuntimeError> {
        if set.contains(&pair) {
            Ok(())
        } else {
            Err(RuntimeError::Protocol(format!("unexpected {what} for {pair:?}")))
        }
    }

    fn negotiate(&mut self, round: usize, tasks: &Tasks) -> Result<BTreeMap<Pair, PairOutcome>, RuntimeError> {
        for &pair in &tasks.send {
            let body = NegotiateRequest {
                pair,
                tiers: build_tiers(self.candidates(pair, pair.0)),
                parked: self.parked(pair.0),
            };
            self.mail.send(self.migrate_env(Phase::Negotiate, round, pair, &body))?;
        }
        let mut remote: BTreeMap<Pair, (Envelope, Vec<Candidate>, Vec<NodeId>)> = BTreeMap::new();
        for env in self.requests(Phase::Negotiate, round, tasks.recv.len())? {
            let req: NegotiateRequest = env.body()?;
            Self::check_pair(&tasks.recv, req.pair, "negotiation")?;
            let cands = req.tiers.into_iter().flat_map(|t| t.candidates).collect();
            if remote.insert(req.pair, (env, cands, req.parked)).is_some() {
                return Err(RuntimeError::Protocol(format!("second negotiation for {:?}", req.pair)));
            }
        }

        // Hosted pairs are processed in one fixed order no matter how the
        // requests arrived, so corner blocking is deterministic.
        let mut outcomes = BTreeMap::new();
        let mut blocks: BTreeMap<AreaId, HostBlocks> = BTreeMap::new();
        for pair in tasks.hosted() {
            let (mut cands, parked) = match remote.get(&pair) {
                Some((_, c, parked)) => (c.clone(), parked.clone()),
                None => (self.candidates(pair, pair.0), self.parked(pair.0)),
            };
            cands.extend(self.candidates(pair, pair.1));
            let host = self.part.area(pair.1);
            let pairs = self.border_pairs(pair);
            let host_parked = self.parked(pair.1);
            let b = blocks.entry(pair.1).or_default();
            b.parked.extend(parked.into_iter().chain(host_parked));
            let outcome = negotiate_pair(host, pair.0, &pairs, cands, b);
            if !outcome.solved {
                debug!(solver = %self.id, round, ?pair, "no border assignment this round");
            }
            outcomes.insert(pair, outcome);
        }
        for (pair, (env, _, _)) in &remote {
            let body = NegotiateResponse {
                pair: *pair,
                outcome: outcomes[pair].clone(),
            };
            self.mail.send(env.response(&body))?;
        }
        for env in self.responses(Phase::Negotiate, round, tasks.send.len())? {
            let resp: NegotiateResponse = env.body()?;
            Self::check_pair(&tasks.send, resp.pair, "negotiation response")?;
            outcomes.insert(resp.pair, resp.outcome);
        }
        Ok(outcomes)
    }

    fn reject(
        &mut self,
        round: usize,
        tasks: &Tasks,
        outcomes: &BTreeMap<Pair, PairOutcome>,
    ) -> Result<BTreeMap<Pair, (Vec<BorderAssignment>, BTreeSet<AgentId>)>, RuntimeError> {
        let mut mine = BTreeSet::new();
        for area in self.my_areas() {
            let mut entries: Vec<Ledgered> = Vec::new();
            for (&p, o) in outcomes.iter().filter(|(p, _)| p.0 == area || p.1 == area) {
                let local = self.owns(p.1);
                entries.extend(o.assignments.iter().map(|&a| Ledgered {
                    pair: p,
                    local,
                    assignment: a,
                }));
            }
            mine.extend(detect_rejections(self.part.area(area), &entries));
        }
        let in_pair = |pair: &Pair| -> Vec<AgentId> {
            outcomes[pair]
                .assignments
                .iter()
                .map(|a| a.agent)
                .filter(|a| mine.contains(a))
                .collect()
        };
        let mut rejected: BTreeMap<Pair, BTreeSet<AgentId>> =
            outcomes.keys().map(|&p| (p, in_pair(&p).into_iter().collect())).collect();
        for &pair in &tasks.send {
            let body = RejectBody {
                pair,
                rejected: in_pair(&pair),
            };
            self.mail.send(self.migrate_env(Phase::Reject, round, pair, &body))?;
        }
        for env in self.requests(Phase::Reject, round, tasks.recv.len())? {
            let req: RejectBody = env.body()?;
            Self::check_pair(&tasks.recv, req.pair, "rejection")?;
            let body = RejectBody {
                pair: req.pair,
                rejected: in_pair(&req.pair),
            };
            self.mail.send(env.response(&body))?;
            rejected.entry(req.pair).or_default().extend(req.rejected);
        }
        for env in self.responses(Phase::Reject, round, tasks.send.len())? {
            let resp: RejectBody = env.body()?;
            Self::check_pair(&tasks.send, resp.pair, "rejection response")?;
            rejected.entry(resp.pair).or_default().extend(resp.rejected);
        }

        let mut settled = BTreeMap::new();
        for (&pair, outcome) in outcomes {
            let gone = rejected.remove(&pair).unwrap_or_default();
            if !gone.is_empty() {
                info!(solver = %self.id, round, ?pair, agents = ?gone, "rejected at a corner");
            }
            let kept: Vec<BorderAssignment> = outcome
                .assignments
                .iter()
                .filter(|a| !gone.contains(&a.agent))
                .copied()
                .collect();
            settled.insert(pair, (kept, gone));
        }
        self.mail.trace.record(|seq| TraceEvent::Settled {
            seq,
            solver: self.id,
            round,
            assignments: settled
                .iter()
                .flat_map(|(&p, (kept, _))| kept.iter().map(move |&a| (p, a)))
                .collect(),
        });
        Ok(settled)
    }

    /// The instance of `area` for this round, built from the agents it holds.
    fn instance(&self, area: AreaId, round: usize) -> AreaInstance {
        let mut inst = AreaInstance::new(area, round);
        for s in self.agents.values().filter(|s| s.plan.current() == area) {
            if s.entering {
                inst.incoming.insert(s.id, s.node);
            } else {
                inst.residents.insert(s.id, s.node);
            }
        }
        inst
    }

    /// Plans every area holding agents. Returns the migrants that reached
    /// their from-border.
    fn plan_areas(
        &mut self,
        round: usize,
        settled: &BTreeMap<Pair, (Vec<BorderAssignment>, BTreeSet<AgentId>)>,
    ) -> BTreeMap<AgentId, (Pair, BorderAssignment)> {
        let mut moving = BTreeMap::new();
        let mut planned = BTreeMap::new();
        for area_id in self.my_areas() {
            let area = self.part.area(area_id);
            let mut inst = self
                .instances
                .get(&round)
                .and_then(|m| m.get(&area_id))
                .cloned()
                .unwrap_or_else(|| self.instance(area_id, round));
            if inst.agent_count() == 0 {
                continue;
            }
            for (&pair, (kept, _)) in settled {
                for a in kept {
                    if area.contains(a.from_border) && inst.position(a.agent).is_some() {
                        inst.outgoing.insert(a.agent, a.from_border);
                        inst.plan_goals.insert(a.agent, a.from_border);
                        moving.insert(a.agent, (pair, *a));
                    } else if area.contains(a.to_border) {
                        inst.reserved.insert(a.to_border);
                    }
                }
            }
            for s in self.agents.values() {
                if s.plan.current() == area_id && s.plan.remaining() == 0 {
                    if let Some(g) = s.goal {
                        inst.plan_goals.insert(s.id, g);
                    }
                }
            }
            inst.crowding_enforced =
                crowding_guard(area.node_count(), inst.agent_count(), inst.reserved.len(), self.cfg.motion.n_f);
            let h_m = horizon(area.node_count(), self.cfg.motion.sensitivity);
            match relax_and_retry(area, &inst, h_m, Some(self.deadline)) {
                Ok(r) => {
                    for a in &r.stripped {
                        moving.remove(a);
                    }
                    for (&a, steps) in &r.plan.steps {
                        let s = self.agents.get_mut(&a).expect("planned agents are known");
                        s.node = *steps.last().expect("plans have a first step");
                        s.entering = false;
                    }
                    planned.insert(area_id, r.instance);
                    self.plans.entry(round).or_default().push(r.plan);
                }
                Err(e) => {
                    warn!(solver = %self.id, round, area = %area_id, error = %e, "movement planning failed");
                    let f = match e {
                        MotionError::Timeout => Failure::Timeout(e.to_string()),
                        MotionError::Infeasible(_) => Failure::Motion(format!("{area_id} in round {round}: {e}")),
                        _ => Failure::Protocol(format!("{area_id} in round {round}: {e}")),
                    };
                    self.failure.get_or_insert(f);
                    moving.clear();
                    break;
                }
            }
        }
        self.instances.insert(round, planned);
        moving
    }

    fn record(&self, agent: AgentId, a: BorderAssignment) -> MigrantRecord {
        let s = &self.agents[&agent];
        MigrantRecord {
            agent,
            plan: s.plan.advanced(),
            node: a.from_border,
            goal: s.goal,
            assignment: a,
        }
    }

    fn confirm(
        &mut self,
        round: usize,
        tasks: &Tasks,
        settled: &BTreeMap<Pair, (Vec<BorderAssignment>, BTreeSet<AgentId>)>,
        moving: BTreeMap<AgentId, (Pair, BorderAssignment)>,
    ) -> Result<(), RuntimeError> {
        let mut leaving: BTreeMap<Pair, Vec<MigrantRecord>> = BTreeMap::new();
        for (&agent, &(pair, a)) in &moving {
            leaving.entry(pair).or_default().push(self.record(agent, a));
        }
        let mut arriving: Vec<(Pair, MigrantRecord)> = Vec::new();
        for &pair in &tasks.send {
            let body = ConfirmBody {
                pair,
                migrants: leaving.get(&pair).cloned().unwrap_or_default(),
            };
            self.mail.send(self.migrate_env(Phase::Confirm, round, pair, &body))?;
        }
        for env in self.requests(Phase::Confirm, round, tasks.recv.len())? {
            let req: ConfirmBody = env.body()?;
            Self::check_pair(&tasks.recv, req.pair, "confirmation")?;
            let body = ConfirmBody {
                pair: req.pair,
                migrants: leaving.get(&req.pair).cloned().unwrap_or_default(),
            };
            self.mail.send(env.response(&body))?;
            arriving.extend(req.migrants.into_iter().map(|m| (req.pair, m)));
        }
        for env in self.responses(Phase::Confirm, round, tasks.send.len())? {
            let resp: ConfirmBody = env.body()?;
            Self::check_pair(&tasks.send, resp.pair, "confirmation response")?;
            arriving.extend(resp.migrants.into_iter().map(|m| (resp.pair, m)));
        }
        for pair in &tasks.local {
            if let Some(recs) = leaving.get(pair) {
                arriving.extend(recs.iter().map(|m| (*pair, m.clone())));
            }
        }

        if self.failure.is_some() {
            // The run aborts at the next barrier; this round's moves never happened.
            return Ok(());
        }
        for agent in moving.keys() {
            self.agents.remove(agent);
        }
        let mut next: BTreeMap<AreaId, AreaInstance> = self
            .my_areas()
            .into_iter()
            .map(|a| (a, self.instance(a, round + 1)))
            .collect();
        let mut by_area: BTreeMap<AreaId, Vec<MigrantRecord>> = BTreeMap::new();
        for (pair, rec) in arriving {
            let (kept, gone) = &settled[&pair];
            if !kept.contains(&rec.assignment) && !gone.contains(&rec.agent) {
                return Err(RuntimeError::Protocol(format!("{} confirmed without an assignment", rec.agent)));
            }
            by_area.entry(rec.plan.current()).or_default().push(rec);
        }
        for (area, recs) in by_area {
            if !self.owns(area) {
                return Err(RuntimeError::Protocol(format!("migrants for foreign area {area}")));
            }
            let gone: BTreeSet<AgentId> = settled.values().flat_map(|(_, g)| g.iter().copied()).collect();
            let inst = next.get_mut(&area).expect("own areas have instances");
            confirm_apply(self.part.area(area), inst, &recs, &gone)?;
            for r in recs {
                self.agents.insert(
                    r.agent,
                    AgentState {
                        id: r.agent,
                        node: r.node,
                        goal: r.goal,
                        plan: r.plan,
                        entering: true,
                    },
                );
            }
        }
        next.retain(|_, inst| inst.agent_count() > 0);
        self.instances.insert(round + 1, next);
        Ok(())
    }

    fn run_round(&mut self, round: usize, tasks: &Tasks) -> Result<(), RuntimeError> {
        let outcomes = self.negotiate(round, tasks)?;
        let settled = self.reject(round, tasks, &outcomes)?;
        let moving = if self.failure.is_none() {
            self.plan_areas(round, &settled)
        } else {
            BTreeMap::new()
        };
        debug!(solver = %self.id, round, migrants = moving.len(), "planned");
        self.confirm(round, tasks, &settled, moving)
    }

    fn finish(&mut self, round: usize) -> Result<Option<GlobalSolution>, RuntimeError> {
        let mine = AggregateBody {
            solver: self.id,
            rounds: self
                .plans
                .iter()
                .map(|(&r, p)| RoundPlans {
                    round: r,
                    plans: p.clone(),
                })
                .collect(),
        };
        let root = SolverId(1);
        if self.id != root {
            self.mail
                .send(Envelope::new(Kind::Aggregate, None, round, self.id, root, &mine))?;
            let until = self.rpc_deadline();
            self.mail
                .take(until, "aggregate ack", |e| e.kind == Kind::Aggregate && e.reply)?;
            return Ok(None);
        }
        let n = self.mail.transport.solver_count();
        let until = self.rpc_deadline();
        let envs = self.mail.take_n(n - 1, until, "partial plans", |e| {
            e.kind == Kind::Aggregate && !e.reply
        })?;
        let mut all: BTreeMap<usize, Vec<MovementPlan>> = (0..round).map(|r| (r, Vec::new())).collect();
        for part in std::iter::once(Ok(mine)).chain(envs.iter().map(|e| e.body::<AggregateBody>())) {
            for rp in part?.rounds {
                all.entry(rp.round).or_default().extend(rp.plans);
            }
        }
        for env in &envs {
            self.mail.send(env.response(&()))?;
        }
        aggregate(&self.problem, &all).map(Some)
    }
}
