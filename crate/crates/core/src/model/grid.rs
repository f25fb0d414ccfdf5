//! Plain character-grid instance format.
//!
//! ```text
//! agent 1 0 0 3 0
//! agent 2 3 1
//!
//! ....
//! .##.
//! ```
//!
//! Header lines give `agent <id> <sx> <sy> [<gx> <gy>]`; a blank line
//! separates them from the grid, where `.` is free and `#` an obstacle.
//! Cell `(x, y)` is column `x` of row `y`; its node id is `y * width + x + 1`.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{AgentId, Coord, ModelError, NodeId, Problem};

pub fn parse_grid(text: &str) -> Result<Problem, ModelError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut starts_xy: Vec<(AgentId, Coord, Option<Coord>, usize)> = Vec::new();

    while i < lines.len() {
        let l = lines[i].trim();
        if l.is_empty() {
            i += 1;
            continue;
        }
        if !l.starts_with("agent") {
            break;
        }
        let lineno = i + 1;
        let bad = |m: &str| ModelError::Parse {
            line: lineno,
            message: m.to_string(),
        };
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields[0] != "agent" || !(fields.len() == 4 || fields.len() == 6) {
            return Err(bad("expected `agent <id> <sx> <sy> [<gx> <gy>]`"));
        }
        let nums: Result<Vec<i64>, _> = fields[1..].iter().map(|f| f.parse::<i64>()).collect();
        let nums = nums.map_err(|_| bad("non-integer field in agent line"))?;
        let id = u32::try_from(nums[0]).map_err(|_| bad("agent id out of range"))?;
        let start = Coord::new(nums[1] as i32, nums[2] as i32);
        let goal = (nums.len() == 5).then(|| Coord::new(nums[3] as i32, nums[4] as i32));
        starts_xy.push((AgentId(id), start, goal, lineno));
        i += 1;
    }

    let mut rows: Vec<(usize, &str)> = lines[i..]
        .iter()
        .enumerate()
        .map(|(k, l)| (i + k + 1, l.trim_end()))
        .collect();
    while rows.last().is_some_and(|(_, l)| l.is_empty()) {
        rows.pop();
    }

    let width = rows.first().map(|(_, l)| l.chars().count()).unwrap_or(0);
    let mut nodes = Vec::new();
    for (y, (lineno, row)) in rows.iter().enumerate() {
        let w = row.chars().count();
        if w != width {
            return Err(ModelError::RaggedGrid {
                row: y,
                width: w,
                expected: width,
            });
        }
        for (x, ch) in row.chars().enumerate() {
            match ch {
                '.' => {
                    let id = (y * width + x + 1) as u32;
                    nodes.push((NodeId(id), Coord::new(x as i32, y as i32)));
                }
                '#' => {}
                other => {
                    return Err(ModelError::Parse {
                        line: *lineno,
                        message: format!("unexpected grid character '{other}'"),
                    })
                }
            }
        }
    }

    let by_coord: BTreeMap<Coord, NodeId> = nodes.iter().map(|&(n, c)| (c, n)).collect();
    let mut starts = BTreeMap::new();
    let mut goals = BTreeMap::new();
    for (a, s, g, _) in starts_xy {
        let sn = *by_coord.get(&s).ok_or(ModelError::NoNodeAt(s))?;
        if starts.insert(a, sn).is_some() {
            return Err(ModelError::DuplicateAgent(a));
        }
        if let Some(g) = g {
            goals.insert(a, *by_coord.get(&g).ok_or(ModelError::NoNodeAt(g))?);
        }
    }
    Problem::new(nodes, starts, goals)
}

/// Writes `p` in the plain-grid format. Coordinates must be non-negative;
/// the grid spans `(0,0)` to the bounding-box maximum.
pub fn render_grid(p: &Problem) -> Result<String, ModelError> {
    let mut out = String::new();
    for (a, s) in p.starts() {
        let sc = p.coord(*s).ok_or(ModelError::UnknownNode(*s))?;
        let _ = write!(out, "agent {} {} {}", a, sc.x, sc.y);
        if let Some(g) = p.goal(*a) {
            let gc = p.coord(g).ok_or(ModelError::UnknownNode(g))?;
            let _ = write!(out, " {} {}", gc.x, gc.y);
        }
        out.push('\n');
    }
    out.push('\n');
    let Some((lo, hi)) = p.bounding_box() else {
        return Ok(out);
    };
    if lo.x < 0 || lo.y < 0 {
        return Err(ModelError::Other(
            "grid rendering needs non-negative coordinates".into(),
        ));
    }
    for y in 0..=hi.y {
        for x in 0..=hi.x {
            out.push(if p.node_at(Coord::new(x, y)).is_some() {
                '.'
            } else {
                '#'
            });
        }
        out.push('\n');
    }
    Ok(out)
}
