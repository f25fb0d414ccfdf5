//! Tiling a problem into subproblems, areas, links and corners.
//!
//! Tiles are `dx × dy` rectangles laid out row-major from the top-left of the
//! bounding box. Each tile with at least one node becomes a subproblem owned
//! by one solver; solver ids start at 1 in tile order. An area is a connected
//! component of a tile, and area ids are global: ordered by solver, then by
//! the smallest node id in the component.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, Coord, Direction, NodeId, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SolverId(pub u32);

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("tile size must be at least 2x2, got {0}x{1}")]
    BadTileSize(i32, i32),
    #[error("problem has no nodes")]
    EmptyProblem,
    #[error("agent {0} starts on a node outside every subproblem")]
    StartOutside(AgentId),
    #[error("agent {0} has a goal outside every subproblem")]
    GoalOutside(AgentId),
    #[error("inconsistent partition: {0}")]
    Inconsistent(String),
}

/// Half-open tile bounds: `x_min <= x < x_max`, `y_min <= y < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl Bounds {
    pub fn contains(&self, c: Coord) -> bool {
        c.x >= self.x_min && c.x < self.x_max && c.y >= self.y_min && c.y < self.y_max
    }

    /// On one of the four bounding lines.
    pub fn on_edge(&self, c: Coord) -> bool {
        c.x == self.x_min || c.x == self.x_max - 1 || c.y == self.y_min || c.y == self.y_max - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subproblem {
    pub id: SolverId,
    pub bounds: Bounds,
    pub nodes: BTreeSet<NodeId>,
    pub robots: BTreeMap<AgentId, NodeId>,
    pub borders: BTreeSet<NodeId>,
    pub areas: Vec<AreaId>,
}

/// One cross-tile adjacency seen from inside an area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub inner: NodeId,
    pub inner_at: Coord,
    pub outer: NodeId,
    pub outer_at: Coord,
    pub area: AreaId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Area {
    pub id: AreaId,
    pub owner: SolverId,
    /// Nodes inside the area.
    pub nodes: BTreeMap<NodeId, Coord>,
    /// Nodes one step outside the area, each in some other area.
    pub out_nodes: BTreeMap<NodeId, Coord>,
    /// Directed moves `(from, to, dir)`; `to` is always inside, `from` is
    /// inside or an out-node.
    pub adjacency: BTreeSet<(NodeId, NodeId, Direction)>,
    pub links: Vec<Link>,
    /// Border nodes linked to two or more other areas, with those areas.
    pub corners: BTreeMap<NodeId, BTreeSet<AreaId>>,
}

impl Area {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains_key(&n)
    }

    pub fn is_corner(&self, n: NodeId) -> bool {
        self.corners.contains_key(&n)
    }

    pub fn coord(&self, n: NodeId) -> Option<Coord> {
        self.nodes
            .get(&n)
            .or_else(|| self.out_nodes.get(&n))
            .copied()
    }
}

/// Border pairs between two linked areas, oriented `(node in low, node in high)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaLink {
    pub low: AreaId,
    pub high: AreaId,
    pub borders: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkGraph {
    pub areas: BTreeSet<AreaId>,
    /// Sorted by `(low, high)`.
    pub pairs: Vec<AreaLink>,
}

impl LinkGraph {
    pub fn get(&self, a: AreaId, b: AreaId) -> Option<&AreaLink> {
        let key = (a.min(b), a.max(b));
        self.pairs
            .binary_search_by(|l| (l.low, l.high).cmp(&key))
            .ok()
            .map(|i| &self.pairs[i])
    }

    pub fn linked(&self, a: AreaId, b: AreaId) -> bool {
        self.get(a, b).is_some()
    }

    pub fn n_l(&self, a: AreaId, b: AreaId) -> usize {
        self.get(a, b).map_or(0, |l| l.borders.len())
    }

    /// Border pairs oriented `(node in from, node in to)`.
    pub fn border_pairs(&self, from: AreaId, to: AreaId) -> Vec<(NodeId, NodeId)> {
        match self.get(from, to) {
            None => Vec::new(),
            Some(l) if l.low == from => l.borders.clone(),
            Some(l) => l.borders.iter().map(|&(x, y)| (y, x)).collect(),
        }
    }

    pub fn neighbors(&self) -> BTreeMap<AreaId, Vec<AreaId>> {
        let mut out: BTreeMap<AreaId, Vec<AreaId>> =
            self.areas.iter().map(|&a| (a, Vec::new())).collect();
        for l in &self.pairs {
            out.entry(l.low).or_default().push(l.high);
            out.entry(l.high).or_default().push(l.low);
        }
        for v in out.values_mut() {
            v.sort();
        }
        out
    }

    /// Builds a graph from bare area-level edges, one border pair each.
    /// Mostly for tests of the area-level algorithms.
    pub fn from_edges(areas: impl IntoIterator<Item = AreaId>, edges: &[(AreaId, AreaId)]) -> Self {
        let mut map: BTreeMap<(AreaId, AreaId), Vec<(NodeId, NodeId)>> = BTreeMap::new();
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                continue;
            }
            let n = i as u32 * 2;
            map.entry((a.min(b), a.max(b)))
                .or_default()
                .push((NodeId(n + 1), NodeId(n + 2)));
        }
        let mut g = LinkGraph {
            areas: areas.into_iter().collect(),
            pairs: map
                .into_iter()
                .map(|((low, high), borders)| AreaLink { low, high, borders })
                .collect(),
        };
        for l in &g.pairs {
            g.areas.insert(l.low);
            g.areas.insert(l.high);
        }
        g
    }
}

/// Where an agent starts and where its goal lies, at area level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub area: AreaId,
    pub goal_area: Option<AreaId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub subproblems: Vec<Subproblem>,
    /// Indexed by `id - 1`.
    pub areas: Vec<Area>,
    pub links: LinkGraph,
    #[serde(skip)]
    node_area: HashMap<NodeId, AreaId>,
}

impl Partition {
    pub fn area(&self, id: AreaId) -> &Area {
        &self.areas[id.0 as usize - 1]
    }

    pub fn try_area(&self, id: AreaId) -> Option<&Area> {
        (id.0 as usize).checked_sub(1).and_then(|i| self.areas.get(i))
    }

    pub fn area_of(&self, n: NodeId) -> Option<AreaId> {
        self.node_area.get(&n).copied()
    }

    pub fn owner(&self, a: AreaId) -> SolverId {
        self.area(a).owner
    }

    pub fn subproblem(&self, s: SolverId) -> &Subproblem {
        &self.subproblems[s.0 as usize - 1]
    }

    pub fn solver_count(&self) -> usize {
        self.subproblems.len()
    }

    pub fn area_count(&self) -> usize {
        self.areas.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serializes")
    }

    /// Reloads a dump. Derived data (areas, links, corners, out-nodes) is
    /// recomputed from the subproblems' node sets and bounds, so a hand-edited
    /// dump only needs those to be right.
    pub fn from_json(text: &str, p: &Problem) -> Result<Partition, PartitionError> {
        let dump: Partition = serde_json::from_str(text)
            .map_err(|e| PartitionError::Inconsistent(format!("bad dump: {e}")))?;
        let tiles = dump
            .subproblems
            .into_iter()
            .map(|s| (s.bounds, s.nodes.into_iter().collect()))
            .collect();
        assemble(p, tiles)
    }
}

/// Splits `p` into `dx × dy` tiles and builds all area-level structure.
pub fn divide(p: &Problem, dx: i32, dy: i32) -> Result<Partition, PartitionError> {
    if dx < 2 || dy < 2 {
        return Err(PartitionError::BadTileSize(dx, dy));
    }
    let (lo, hi) = p.bounding_box().ok_or(PartitionError::EmptyProblem)?;
    let cols = (hi.x - lo.x + 1 + dx - 1) / dx;
    let rows = (hi.y - lo.y + 1 + dy - 1) / dy;
    let mut tiles: Vec<(Bounds, Vec<NodeId>)> = Vec::new();
    let mut index: HashMap<(i32, i32), usize> = HashMap::new();
    for ty in 0..rows {
        for tx in 0..cols {
            let x_min = lo.x + tx * dx;
            let y_min = lo.y + ty * dy;
            index.insert((tx, ty), tiles.len());
            tiles.push((
                Bounds {
                    x_min,
                    x_max: x_min + dx,
                    y_min,
                    y_max: y_min + dy,
                },
                Vec::new(),
            ));
        }
    }
    for (&n, c) in p.nodes() {
        let key = ((c.x - lo.x) / dx, (c.y - lo.y) / dy);
        tiles[index[&key]].1.push(n);
    }
    tiles.retain(|(_, nodes)| !nodes.is_empty());
    assemble(p, tiles)
}

fn assemble(p: &Problem, tiles: Vec<(Bounds, Vec<NodeId>)>) -> Result<Partition, PartitionError> {
    let mut tile_of: HashMap<NodeId, usize> = HashMap::new();
    for (t, (bounds, nodes)) in tiles.iter().enumerate() {
        for &n in nodes {
            let c = p
                .coord(n)
                .ok_or_else(|| PartitionError::Inconsistent(format!("unknown node {n}")))?;
            if !bounds.contains(c) {
                return Err(PartitionError::Inconsistent(format!(
                    "node {n} at {c} lies outside its tile"
                )));
            }
            if tile_of.insert(n, t).is_some() {
                return Err(PartitionError::Inconsistent(format!("node {n} in two tiles")));
            }
        }
    }
    if tile_of.len() != p.node_count() {
        return Err(PartitionError::Inconsistent(
            "some nodes belong to no subproblem".into(),
        ));
    }
    if tiles.is_empty() {
        return Err(PartitionError::EmptyProblem);
    }

    // Areas: connected components per tile, discovered from the smallest node.
    let mut node_area: HashMap<NodeId, AreaId> = HashMap::new();
    let mut subproblems = Vec::new();
    let mut area_nodes: Vec<(SolverId, BTreeMap<NodeId, Coord>)> = Vec::new();
    for (t, (bounds, nodes)) in tiles.iter().enumerate() {
        let sid = SolverId(t as u32 + 1);
        let mut sorted = nodes.clone();
        sorted.sort();
        let mut areas = Vec::new();
        for &seed in &sorted {
            if node_area.contains_key(&seed) {
                continue;
            }
            let aid = AreaId(area_nodes.len() as u32 + 1);
            let mut comp = BTreeMap::new();
            let mut queue = VecDeque::from([seed]);
            node_area.insert(seed, aid);
            while let Some(n) = queue.pop_front() {
                comp.insert(n, p.coord(n).expect("checked above"));
                for (_, m) in p.neighbors(n) {
                    if tile_of.get(&m) == Some(&t) && !node_area.contains_key(&m) {
                        node_area.insert(m, aid);
                        queue.push_back(m);
                    }
                }
            }
            areas.push(aid);
            area_nodes.push((sid, comp));
        }
        let borders = sorted
            .iter()
            .copied()
            .filter(|&n| bounds.on_edge(p.coord(n).expect("checked above")))
            .collect();
        let robots = p
            .starts()
            .iter()
            .filter(|(_, n)| tile_of.get(n) == Some(&t))
            .map(|(&a, &n)| (a, n))
            .collect();
        subproblems.push(Subproblem {
            id: sid,
            bounds: *bounds,
            nodes: sorted.into_iter().collect(),
            robots,
            borders,
            areas,
        });
    }

    // Links: adjacencies across tiles.
    let mut pair_map: BTreeMap<(AreaId, AreaId), Vec<(NodeId, NodeId)>> = BTreeMap::new();
    let mut areas: Vec<Area> = Vec::with_capacity(area_nodes.len());
    for (i, (owner, nodes)) in area_nodes.into_iter().enumerate() {
        let id = AreaId(i as u32 + 1);
        let mut out_nodes = BTreeMap::new();
        let mut adjacency = BTreeSet::new();
        let mut links = Vec::new();
        for (&n, &c) in &nodes {
            for (d, m) in p.neighbors(n) {
                let other = node_area[&m];
                if other == id {
                    adjacency.insert((n, m, d));
                    continue;
                }
                let mc = p.coord(m).expect("neighbor exists");
                out_nodes.insert(m, mc);
                let back = Direction::between(mc, c).expect("grid neighbors");
                adjacency.insert((m, n, back));
                links.push(Link {
                    inner: n,
                    inner_at: c,
                    outer: m,
                    outer_at: mc,
                    area: other,
                });
                if id < other {
                    pair_map.entry((id, other)).or_default().push((n, m));
                }
            }
        }
        links.sort();
        areas.push(Area {
            id,
            owner,
            nodes,
            out_nodes,
            adjacency,
            links,
            corners: BTreeMap::new(),
        });
    }
    let mut links = LinkGraph {
        areas: areas.iter().map(|a| a.id).collect(),
        pairs: pair_map
            .into_iter()
            .map(|((low, high), mut borders)| {
                borders.sort();
                AreaLink { low, high, borders }
            })
            .collect(),
    };
    links.pairs.sort_by_key(|l| (l.low, l.high));
    for (aid, corners) in find_corners(&links) {
        areas[aid.0 as usize - 1].corners = corners;
    }

    Ok(Partition {
        subproblems,
        areas,
        links,
        node_area,
    })
}

/// For each area, the border nodes linked to at least two other areas.
pub fn find_corners(links: &LinkGraph) -> BTreeMap<AreaId, BTreeMap<NodeId, BTreeSet<AreaId>>> {
    let mut touches: BTreeMap<(AreaId, NodeId), BTreeSet<AreaId>> = BTreeMap::new();
    for l in &links.pairs {
        for &(nl, nh) in &l.borders {
            touches.entry((l.low, nl)).or_default().insert(l.high);
            touches.entry((l.high, nh)).or_default().insert(l.low);
        }
    }
    let mut out: BTreeMap<AreaId, BTreeMap<NodeId, BTreeSet<AreaId>>> = BTreeMap::new();
    for ((a, n), others) in touches {
        if others.len() >= 2 {
            out.entry(a).or_default().insert(n, others);
        }
    }
    out
}

/// Start area and goal area of every agent.
pub fn assign_agents(
    part: &Partition,
    p: &Problem,
) -> Result<BTreeMap<AgentId, Placement>, PartitionError> {
    let mut out = BTreeMap::new();
    for (&a, &s) in p.starts() {
        let area = part.area_of(s).ok_or(PartitionError::StartOutside(a))?;
        let goal_area = match p.goal(a) {
            None => None,
            Some(g) => Some(part.area_of(g).ok_or(PartitionError::GoalOutside(a))?),
        };
        out.insert(a, Placement { area, goal_area });
    }
    Ok(out)
}
