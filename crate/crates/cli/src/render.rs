//! Static pictures of partitions and solutions: SVG documents or ASCII
//! frames.

use std::collections::BTreeMap;
use std::fmt::Write;

use mapf_core::model::{AgentId, Coord, GlobalSolution, NodeId, Problem};
use mapf_core::partition::{AreaId, Partition};

const CELL: i32 = 20;

/// Per-node role in a partition picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Inner,
    Border,
    Corner,
}

struct Layout {
    lo: Coord,
    hi: Coord,
    cells: BTreeMap<Coord, (NodeId, AreaId, Role)>,
}

impl Layout {
    fn new(p: &Problem, part: &Partition) -> Layout {
        let (lo, hi) = p.bounding_box().unwrap_or((Coord::new(0, 0), Coord::new(-1, -1)));
        let mut cells = BTreeMap::new();
        for area in &part.areas {
            let linked: std::collections::BTreeSet<NodeId> = area.links.iter().map(|l| l.inner).collect();
            for (&n, &c) in &area.nodes {
                let role = if area.is_corner(n) {
                    Role::Corner
                } else if linked.contains(&n) {
                    Role::Border
                } else {
                    Role::Inner
                };
                cells.insert(c, (n, area.id, role));
            }
        }
        Layout { lo, hi, cells }
    }

    fn width(&self) -> i32 {
        self.hi.x - self.lo.x + 1
    }

    fn height(&self) -> i32 {
        self.hi.y - self.lo.y + 1
    }
}

/// Fill colour of an area; golden-angle hues keep neighbours apart.
pub fn area_color(a: AreaId) -> String {
    let hue = (a.0 as f64 * 137.508) % 360.0;
    format!("hsl({hue:.0},65%,72%)")
}

fn area_letter(a: AreaId) -> char {
    (b'a' + ((a.0 - 1) % 26) as u8) as char
}

fn agent_char(a: AgentId) -> char {
    (b'0' + (a.0 % 10) as u8) as char
}

fn svg_cells(l: &Layout, out: &mut String) {
    for y in l.lo.y..=l.hi.y {
        for x in l.lo.x..=l.hi.x {
            let (px, py) = ((x - l.lo.x) * CELL, (y - l.lo.y) * CELL);
            match l.cells.get(&Coord::new(x, y)) {
                None => {
                    let _ = writeln!(out, r##"<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="#333"/>"##);
                }
                Some(&(n, a, role)) => {
                    let (stroke, sw) = match role {
                        Role::Inner => ("#fff", 0.5),
                        Role::Border | Role::Corner => ("#222", 1.5),
                    };
                    let _ = writeln!(
                        out,
                        r#"<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="{}" stroke="{stroke}" stroke-width="{sw}" data-node="{n}" data-area="{}"/>"#,
                        area_color(a),
                        a.0
                    );
                    if role == Role::Corner {
                        let (cx, cy, r) = (px + CELL / 2, py + CELL / 2, CELL / 3);
                        let _ = writeln!(
                            out,
                            r##"<polygon class="corner" points="{},{} {},{} {},{} {},{}" fill="#d22"/>"##,
                            cx,
                            cy - r,
                            cx + r,
                            cy,
                            cx,
                            cy + r,
                            cx - r,
                            cy
                        );
                    }
                }
            }
        }
    }
}

fn svg_open(l: &Layout, extra_h: i32) -> String {
    let (w, h) = (l.width() * CELL, l.height() * CELL + extra_h);
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#) + "\n"
}

/// One SVG picture of the areas: colour per area, outlined borders and
/// diamond-marked corners.
pub fn partition_svg(p: &Problem, part: &Partition) -> String {
    let l = Layout::new(p, part);
    let mut out = svg_open(&l, 0);
    svg_cells(&l, &mut out);
    out.push_str("</svg>\n");
    out
}

/// Area letters, upper case on linked borders and `+` on corners.
pub fn partition_ascii(p: &Problem, part: &Partition) -> String {
    let l = Layout::new(p, part);
    let mut out = String::new();
    for y in l.lo.y..=l.hi.y {
        for x in l.lo.x..=l.hi.x {
            out.push(match l.cells.get(&Coord::new(x, y)) {
                None => '#',
                Some(&(_, a, Role::Inner)) => area_letter(a),
                Some(&(_, a, Role::Border)) => area_letter(a).to_ascii_uppercase(),
                Some(&(_, _, Role::Corner)) => '+',
            });
        }
        out.push('\n');
    }
    out
}

fn positions(sol: &GlobalSolution, t: usize) -> BTreeMap<NodeId, AgentId> {
    sol.paths
        .iter()
        .filter_map(|(&a, path)| path.get(t).map(|&n| (n, a)))
        .collect()
}

/// One SVG document per time step `0..=makespan`.
pub fn solution_svg(p: &Problem, part: &Partition, sol: &GlobalSolution) -> Vec<String> {
    let l = Layout::new(p, part);
    (0..=sol.makespan)
        .map(|t| {
            let mut out = svg_open(&l, CELL);
            svg_cells(&l, &mut out);
            for (n, a) in positions(sol, t) {
                let Some(c) = p.coord(n) else { continue };
                let (cx, cy) = ((c.x - l.lo.x) * CELL + CELL / 2, (c.y - l.lo.y) * CELL + CELL / 2);
                let _ = writeln!(
                    out,
                    r##"<circle cx="{cx}" cy="{cy}" r="{}" fill="#1a4d8f"/><text x="{cx}" y="{}" font-size="9" text-anchor="middle" fill="#fff">{a}</text>"##,
                    CELL * 2 / 5,
                    cy + 3
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="4" y="{}" font-size="12">t={t}</text>"#,
                l.height() * CELL + CELL - 6
            );
            out.push_str("</svg>\n");
            out
        })
        .collect()
}

/// All frames in one text, each headed `t=<step>` and followed by a blank
/// line. Agents show as the last digit of their id.
pub fn solution_ascii(p: &Problem, part: &Partition, sol: &GlobalSolution) -> String {
    let l = Layout::new(p, part);
    let mut out = String::new();
    for t in 0..=sol.makespan {
        let at = positions(sol, t);
        let _ = writeln!(out, "t={t}");
        for y in l.lo.y..=l.hi.y {
            for x in l.lo.x..=l.hi.x {
                out.push(match l.cells.get(&Coord::new(x, y)) {
                    None => '#',
                    Some((n, _, _)) if at.contains_key(n) => agent_char(at[n]),
                    Some(&(_, _, Role::Corner)) => '+',
                    Some(&(_, a, _)) => area_letter(a),
                });
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
