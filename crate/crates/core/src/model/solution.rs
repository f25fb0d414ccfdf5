use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{AgentId, Coord, ModelError, NodeId, Problem};

/// Per-agent node sequences over global time `0..=makespan`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalSolution {
    pub paths: BTreeMap<AgentId, Vec<NodeId>>,
    pub makespan: usize,
    pub moves: usize,
}

/// `(makespan, moves)` of a set of equal-length paths.
pub fn metrics(paths: &BTreeMap<AgentId, Vec<NodeId>>) -> Result<(usize, usize), ModelError> {
    let mut len = None;
    let mut moves = 0;
    for p in paths.values() {
        match len {
            None => len = Some(p.len()),
            Some(l) if l != p.len() => return Err(ModelError::LengthMismatch),
            _ => {}
        }
        moves += p.windows(2).filter(|w| w[0] != w[1]).count();
    }
    Ok((len.unwrap_or(1).saturating_sub(1), moves))
}

impl GlobalSolution {
    pub fn from_paths(paths: BTreeMap<AgentId, Vec<NodeId>>) -> Result<Self, ModelError> {
        let (makespan, moves) = metrics(&paths)?;
        Ok(GlobalSolution {
            paths,
            makespan,
            moves,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// One line per agent: `agent <id>: (x0,y0) (x1,y1) ...`.
    pub fn to_text(&self, p: &Problem) -> Result<String, ModelError> {
        let mut out = String::new();
        for (a, path) in &self.paths {
            let _ = write!(out, "agent {a}:");
            for n in path {
                let c = p.coord(*n).ok_or(ModelError::UnknownNode(*n))?;
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Inverse of [`GlobalSolution::to_text`]. Path lengths are not checked
    /// here so that truncated solutions can still be validated.
    pub fn from_text(text: &str, p: &Problem) -> Result<Self, ModelError> {
        let mut paths = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| ModelError::Parse {
                line: i + 1,
                message: m,
            };
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| bad("missing ':'".into()))?;
            let id = head
                .strip_prefix("agent")
                .and_then(|s| s.trim().parse::<u32>().ok())
                .ok_or_else(|| bad(format!("bad agent header '{head}'")))?;
            let mut path = Vec::new();
            for tok in rest.split_whitespace() {
                let inner = tok
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| bad(format!("bad coordinate '{tok}'")))?;
                let (x, y) = inner
                    .split_once(',')
                    .ok_or_else(|| bad(format!("bad coordinate '{tok}'")))?;
                let c = Coord::new(
                    x.parse().map_err(|_| bad(format!("bad x in '{tok}'")))?,
                    y.parse().map_err(|_| bad(format!("bad y in '{tok}'")))?,
                );
                path.push(p.node_at(c).ok_or(ModelError::NoNodeAt(c))?);
            }
            paths.insert(AgentId(id), path);
        }
        let (makespan, moves) = metrics(&paths).unwrap_or((0, 0));
        Ok(GlobalSolution {
            paths,
            makespan,
            moves,
        })
    }
}
