//! Seeded random instances on rectangular grids with optional obstacles.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

use mapf_core::model::{parse_grid, ModelError, Problem};
use mapf_core::partition::{divide, AreaId, PartitionError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub width: usize,
    pub height: usize,
    pub agents: usize,
    /// Fraction of cells turned into obstacles.
    pub density: f64,
    pub seed: u64,
    /// Only pair starts with goals reachable from them.
    pub solvable: bool,
}

impl GenerateSpec {
    pub fn open(width: usize, height: usize, agents: usize, seed: u64) -> Self {
        GenerateSpec {
            width,
            height,
            agents,
            density: 0.0,
            seed,
            solvable: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("map must be at least 1x1, got {0}x{1}")]
    EmptyMap(usize, usize),
    #[error("obstacle density must lie in [0, 1], got {0}")]
    Density(f64),
    #[error("no free cells left")]
    NoFreeCells,
    #[error("{agents} agents need {agents} free cells, only {free} available")]
    TooManyAgents { agents: usize, free: usize },
    #[error("only {placed} of {agents} agents could get a reachable goal")]
    Unreachable { placed: usize, agents: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

#[derive(Debug, Clone)]
pub struct Generated {
    /// The instance in the plain grid format.
    pub text: String,
    pub problem: Problem,
}

/// Builds an instance. The same spec always gives the same text.
pub fn generate(spec: &GenerateSpec) -> Result<Generated, GenerateError> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(GenerateError::EmptyMap(w, h));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(GenerateError::Density(spec.density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut cells: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
    cells.shuffle(&mut rng);
    let blocked = (spec.density * (w * h) as f64).round() as usize;
    let mut free = cells.split_off(blocked.min(cells.len()));
    if free.is_empty() {
        return Err(GenerateError::NoFreeCells);
    }
    if free.len() < spec.agents {
        return Err(GenerateError::TooManyAgents {
            agents: spec.agents,
            free: free.len(),
        });
    }
    let mut grid = vec![vec!['#'; w]; h];
    for &(x, y) in &free {
        grid[y][x] = '.';
    }

    // Reachability classes of free cells, by connected areas.
    let component: Option<BTreeMap<(usize, usize), usize>> = if spec.solvable {
        Some(components(&grid)?)
    } else {
        None
    };
    let same = |a: (usize, usize), b: (usize, usize)| component.as_ref().map_or(true, |c| c[&a] == c[&b]);

    let mut goals_pool = free.clone();
    goals_pool.shuffle(&mut rng);
    free.shuffle(&mut rng);
    let mut goal_used = vec![false; goals_pool.len()];
    let mut pairs = Vec::with_capacity(spec.agents);
    for &s in &free {
        if pairs.len() == spec.agents {
            break;
        }
        if let Some(k) = (0..goals_pool.len()).find(|&k| !goal_used[k] && same(s, goals_pool[k])) {
            goal_used[k] = true;
            pairs.push((s, goals_pool[k]));
        }
    }
    if pairs.len() < spec.agents {
        return Err(GenerateError::Unreachable {
            placed: pairs.len(),
            agents: spec.agents,
        });
    }

    let mut text = String::new();
    for (i, ((sx, sy), (gx, gy))) in pairs.iter().enumerate() {
        let _ = writeln!(text, "agent {} {sx} {sy} {gx} {gy}", i + 1);
    }
    text.push('\n');
    for row in &grid {
        text.extend(row.iter());
        text.push('\n');
    }
    let problem = parse_grid(&text)?;
    Ok(Generated { text, problem })
}

/// Labels every free cell with the connected component of its area in the
/// area link graph.
fn components(grid: &[Vec<char>]) -> Result<BTreeMap<(usize, usize), usize>, GenerateError> {
    let mut text = String::from("\n");
    for row in grid {
        text.extend(row.iter());
        text.push('\n');
    }
    let bare = parse_grid(&text)?;
    let part = divide(&bare, 8, 8)?;
    let nbrs = part.links.neighbors();
    let mut label: BTreeMap<AreaId, usize> = BTreeMap::new();
    for &root in &part.links.areas {
        if label.contains_key(&root) {
            continue;
        }
        let id = label.len();
        label.insert(root, id);
        let mut queue = VecDeque::from([root]);
        while let Some(a) = queue.pop_front() {
            for &b in nbrs.get(&a).into_iter().flatten() {
                if !label.contains_key(&b) {
                    label.insert(b, id);
                    queue.push_back(b);
                }
            }
        }
    }
    Ok(bare
        .nodes()
        .iter()
        .map(|(&n, c)| {
            let area = part.area_of(n).expect("every node lies in an area");
            ((c.x as usize, c.y as usize), label[&area])
        })
        .collect())
}
