//! Core MAPF data model: grid graph, agents, starts and goals.
//!
//! A [`Problem`] is immutable after construction. Edges are never stored
//! explicitly: the graph is grid-based, so two nodes are adjacent exactly
//! when their coordinates differ by one of the four [`Direction`] deltas.
//! Waiting is implicit and not an edge.

mod asprilo;
mod grid;
mod solution;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asprilo::parse_asprilo;
pub use grid::{parse_grid, render_grid};
pub use solution::{metrics, GlobalSolution};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Integer grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Coord { x, y }
    }

    pub fn manhattan(self, other: Coord) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn step(self, dir: Direction) -> Coord {
        let (dx, dy) = dir.delta();
        Coord::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// One of the four unit moves. Codes follow the order left, right, up, down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left = 0,
    Right = 1,
    Up = 2,
    Down = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Direction> {
        Direction::ALL.get(code as usize).copied()
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Left => (-1, 0),
            Direction::Right => (1, 0),
            Direction::Up => (0, -1),
            Direction::Down => (0, 1),
        }
    }

    pub fn from_delta(dx: i32, dy: i32) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.delta() == (dx, dy))
    }

    /// Direction of the move `from -> to`, if the cells are grid neighbours.
    pub fn between(from: Coord, to: Coord) -> Option<Direction> {
        Direction::from_delta(to.x - from.x, to.y - from.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("nodes {0} and {1} share coordinate {2}")]
    DuplicateCoord(NodeId, NodeId, Coord),
    #[error("agents {0} and {1} share start node {2}")]
    DuplicateStart(AgentId, AgentId, NodeId),
    #[error("agents {0} and {1} share goal node {2}")]
    DuplicateGoal(AgentId, AgentId, NodeId),
    #[error("agent {0} has more than one order")]
    DuplicateOrder(AgentId),
    #[error("agent {0} is declared twice")]
    DuplicateAgent(AgentId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("agent {0} has no start")]
    MissingStart(AgentId),
    #[error("no node at coordinate {0}")]
    NoNodeAt(Coord),
    #[error("dangling reference: {0}")]
    MissingReference(String),
    #[error("grid row {row} has width {width}, expected {expected}")]
    RaggedGrid { row: usize, width: usize, expected: usize },
    #[error("solution paths have unequal lengths")]
    LengthMismatch,
    #[error("{0}")]
    Other(String),
}

/// A MAPF instance: grid graph, agents, start map and partial goal map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    nodes: BTreeMap<NodeId, Coord>,
    by_coord: HashMap<Coord, NodeId>,
    starts: BTreeMap<AgentId, NodeId>,
    goals: BTreeMap<AgentId, NodeId>,
}

impl Problem {
    /// Builds a problem, checking node, start and goal uniqueness.
    pub fn new(
        nodes: impl IntoIterator<Item = (NodeId, Coord)>,
        starts: BTreeMap<AgentId, NodeId>,
        goals: BTreeMap<AgentId, NodeId>,
    ) -> Result<Problem, ModelError> {
        let mut node_map = BTreeMap::new();
        let mut by_coord: HashMap<Coord, NodeId> = HashMap::new();
        for (id, c) in nodes {
            if node_map.insert(id, c).is_some() {
                return Err(ModelError::DuplicateNode(id));
            }
            if let Some(prev) = by_coord.insert(c, id) {
                return Err(ModelError::DuplicateCoord(prev, id, c));
            }
        }
        let mut seen: HashMap<NodeId, AgentId> = HashMap::new();
        for (&a, &n) in &starts {
            if !node_map.contains_key(&n) {
                return Err(ModelError::UnknownNode(n));
            }
            if let Some(prev) = seen.insert(n, a) {
                return Err(ModelError::DuplicateStart(prev, a, n));
            }
        }
        seen.clear();
        for (&a, &n) in &goals {
            if !starts.contains_key(&a) {
                return Err(ModelError::UnknownAgent(a));
            }
            if !node_map.contains_key(&n) {
                return Err(ModelError::UnknownNode(n));
            }
            if let Some(prev) = seen.insert(n, a) {
                return Err(ModelError::DuplicateGoal(prev, a, n));
            }
        }
        Ok(Problem {
            nodes: node_map,
            by_coord,
            starts,
            goals,
        })
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, Coord> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn coord(&self, node: NodeId) -> Option<Coord> {
        self.nodes.get(&node).copied()
    }

    pub fn node_at(&self, c: Coord) -> Option<NodeId> {
        self.by_coord.get(&c).copied()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.starts.keys().copied()
    }

    pub fn agent_count(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &BTreeMap<AgentId, NodeId> {
        &self.starts
    }

    pub fn goals(&self) -> &BTreeMap<AgentId, NodeId> {
        &self.goals
    }

    pub fn start(&self, a: AgentId) -> Option<NodeId> {
        self.starts.get(&a).copied()
    }

    pub fn goal(&self, a: AgentId) -> Option<NodeId> {
        self.goals.get(&a).copied()
    }

    /// Grid neighbours of `node` in direction-code order.
    pub fn neighbors(&self, node: NodeId) -> impl Iterator<Item = (Direction, NodeId)> + '_ {
        let c = self.nodes.get(&node).copied();
        Direction::ALL.into_iter().filter_map(move |d| {
            let c = c?;
            self.node_at(c.step(d)).map(|n| (d, n))
        })
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        match (self.coord(a), self.coord(b)) {
            (Some(ca), Some(cb)) => ca.manhattan(cb) == 1,
            _ => false,
        }
    }

    /// All directed edges, each adjacency appearing in both orientations.
    pub fn edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.nodes
            .keys()
            .flat_map(|&n| self.neighbors(n).map(move |(_, m)| (n, m)))
            .collect()
    }

    /// Inclusive bounding box `(min, max)` of all node coordinates.
    pub fn bounding_box(&self) -> Option<(Coord, Coord)> {
        let mut it = self.nodes.values();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for c in it {
            lo.x = lo.x.min(c.x);
            lo.y = lo.y.min(c.y);
            hi.x = hi.x.max(c.x);
            hi.y = hi.y.max(c.y);
        }
        Some((lo, hi))
    }
}

/// Parses either instance format, choosing by content: ASPRILO facts start
/// with `init(` after comments are stripped.
pub fn parse_instance(text: &str) -> Result<Problem, ModelError> {
    let first = text
        .lines()
        .map(|l| l.split('%').next().unwrap_or("").trim())
        .find(|l| !l.is_empty());
    match first {
        Some(l) if l.starts_with("init") => parse_asprilo(text),
        _ => parse_grid(text),
    }
}
