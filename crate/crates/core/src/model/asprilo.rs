//! Reader for the subset of ASPRILO `init/2` facts that describe nodes,
//! robots and the order -> product -> shelf -> node goal chain.

use std::collections::BTreeMap;

use super::{AgentId, Coord, ModelError, NodeId, Problem};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Term {
    Int(i64),
    Sym(String),
    Func(String, Vec<Term>),
    Tuple(Vec<Term>),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            pos: 0,
            line: 1,
        }
    }

    fn err(&self, message: impl Into<String>) -> ModelError {
        ModelError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(&b) = self.src.get(self.pos) {
            match b {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'%' => {
                    while let Some(&c) = self.src.get(self.pos) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_trivia();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, want: u8) -> Result<(), ModelError> {
        let before = self.line;
        match self.peek() {
            Some(b) if b == want => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.err(format!(
                "expected '{}', found '{}'",
                want as char, b as char
            ))),
            None => Err(ModelError::Parse {
                line: before,
                message: format!("expected '{}', found end of input", want as char),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ModelError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let args = self.args(b')')?;
                Ok(Term::Tuple(args))
            }
            Some(b) if b == b'-' || b.is_ascii_digit() => {
                let start = self.pos;
                self.pos += 1;
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                s.parse()
                    .map(Term::Int)
                    .map_err(|_| self.err(format!("bad integer '{s}'")))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
                if self.src.get(self.pos) == Some(&b'(') {
                    self.pos += 1;
                    let args = self.args(b')')?;
                    Ok(Term::Func(name, args))
                } else {
                    Ok(Term::Sym(name))
                }
            }
            Some(b) => Err(self.err(format!("unexpected character '{}'", b as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn args(&mut self, close: u8) -> Result<Vec<Term>, ModelError> {
        let mut out = vec![self.term()?];
        loop {
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    out.push(self.term()?);
                }
                Some(b) if b == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.err(format!("expected ',' or '{}'", close as char))),
            }
        }
    }
}

enum Fact {
    Node(i64, Coord),
    Robot(i64, Coord),
    Shelf(i64, Coord),
    OrderLine(i64, i64),
    ProductOn(i64, i64),
}

fn int(t: &Term) -> Option<i64> {
    match t {
        Term::Int(v) => Some(*v),
        _ => None,
    }
}

fn pair(t: &Term) -> Option<(i64, i64)> {
    match t {
        Term::Tuple(v) if v.len() == 2 => Some((int(&v[0])?, int(&v[1])?)),
        _ => None,
    }
}

fn classify(t: &Term) -> Option<Fact> {
    let Term::Func(head, args) = t else {
        return None;
    };
    if head != "init" || args.len() != 2 {
        return None;
    }
    let (Term::Func(o, oargs), Term::Func(v, vargs)) = (&args[0], &args[1]) else {
        return None;
    };
    if o != "object" || v != "value" || oargs.len() != 2 || vargs.len() != 2 {
        return None;
    }
    let (Term::Sym(kind), Term::Sym(key)) = (&oargs[0], &vargs[0]) else {
        return None;
    };
    let id = int(&oargs[1])?;
    let (a, b) = pair(&vargs[1])?;
    let coord = || Coord::new(a as i32, b as i32);
    match (kind.as_str(), key.as_str()) {
        ("node", "at") => Some(Fact::Node(id, coord())),
        ("robot", "at") => Some(Fact::Robot(id, coord())),
        ("shelf", "at") => Some(Fact::Shelf(id, coord())),
        ("order", "line") => Some(Fact::OrderLine(id, a)),
        ("product", "on") => Some(Fact::ProductOn(id, a)),
        _ => None,
    }
}

fn to_u32(v: i64, what: &str, line: usize) -> Result<u32, ModelError> {
    u32::try_from(v).map_err(|_| ModelError::Parse {
        line,
        message: format!("{what} id {v} out of range"),
    })
}

/// Parses ASPRILO facts. Each robot has at most one order; the order shares
/// the robot's id and its goal is the node under the shelf holding the
/// ordered product. Robots without an order have no goal.
pub fn parse_asprilo(text: &str) -> Result<Problem, ModelError> {
    let mut lx = Lexer::new(text);
    let mut nodes: BTreeMap<NodeId, Coord> = BTreeMap::new();
    let mut robots: BTreeMap<AgentId, Coord> = BTreeMap::new();
    let mut shelves: BTreeMap<i64, Coord> = BTreeMap::new();
    let mut products: BTreeMap<i64, i64> = BTreeMap::new();
    let mut orders: BTreeMap<AgentId, i64> = BTreeMap::new();

    while lx.peek().is_some() {
        let line = lx.line;
        let term = lx.term()?;
        lx.expect(b'.')?;
        let fact = classify(&term).ok_or_else(|| ModelError::Parse {
            line,
            message: "unsupported fact; only init/2 facts for node, robot, shelf (at), \
                      order (line) and product (on) are accepted"
                .to_string(),
        })?;
        match fact {
            Fact::Node(id, c) => {
                let id = NodeId(to_u32(id, "node", line)?);
                if nodes.insert(id, c).is_some() {
                    return Err(ModelError::DuplicateNode(id));
                }
            }
            Fact::Robot(id, c) => {
                let id = AgentId(to_u32(id, "robot", line)?);
                if robots.insert(id, c).is_some() {
                    return Err(ModelError::DuplicateAgent(id));
                }
            }
            Fact::Shelf(id, c) => {
                if shelves.insert(id, c).is_some() {
                    return Err(ModelError::Parse {
                        line,
                        message: format!("shelf {id} placed twice"),
                    });
                }
            }
            Fact::OrderLine(order, product) => {
                let id = AgentId(to_u32(order, "order", line)?);
                if orders.insert(id, product).is_some() {
                    return Err(ModelError::DuplicateOrder(id));
                }
            }
            Fact::ProductOn(product, shelf) => {
                if products.insert(product, shelf).is_some() {
                    return Err(ModelError::Parse {
                        line,
                        message: format!("product {product} is on more than one shelf"),
                    });
                }
            }
        }
    }

    let by_coord: BTreeMap<Coord, NodeId> = nodes.iter().map(|(&n, &c)| (c, n)).collect();
    let mut starts = BTreeMap::new();
    for (&r, &c) in &robots {
        let n = by_coord.get(&c).ok_or(ModelError::NoNodeAt(c))?;
        starts.insert(r, *n);
    }
    let mut goals = BTreeMap::new();
    for (&r, &product) in &orders {
        if !robots.contains_key(&r) {
            return Err(ModelError::MissingReference(format!(
                "order {r} has no robot with the same id"
            )));
        }
        let shelf = products.get(&product).ok_or_else(|| {
            ModelError::MissingReference(format!("order {r} names unknown product {product}"))
        })?;
        let c = shelves.get(shelf).ok_or_else(|| {
            ModelError::MissingReference(format!("product {product} is on unknown shelf {shelf}"))
        })?;
        let n = by_coord.get(c).ok_or_else(|| {
            ModelError::MissingReference(format!("shelf {shelf} at {c} is not on a node"))
        })?;
        goals.insert(r, *n);
    }
    Problem::new(nodes, starts, goals)
}
