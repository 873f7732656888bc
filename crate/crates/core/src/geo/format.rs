//! Plain-text world format.
//!
//! One record per line, fields separated by `|`, surrounding whitespace
//! ignored. Blank lines and lines starting with `#` are skipped.
//!
//! ```text
//! node|<id>|<x>|<y>
//! edge|<a>|<b>[|<length>]
//! building|<id>|<x>|<y>
//! waterway|<id>|<x1>|<y1>|<x2>|<y2>[|<x>|<y>...]
//! shelter|<id>|<node>|<capacity>|internal
//! shelter|<id>|<node>|unbounded|external
//! rescuer_start|<node>
//! ```
//!
//! Ids are unsigned 32-bit integers, coordinates are meters. An omitted edge
//! length defaults to the Euclidean distance of its endpoints; a given one
//! must agree with it within [`EDGE_LENGTH_TOLERANCE`](super::EDGE_LENGTH_TOLERANCE).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{
    Building, BuildingId, Capacity, Edge, NodeId, Point, Shelter, ShelterId, Waterway, WaterwayId, World, WorldParts,
};
use crate::{Error, Result};

pub fn load_world(path: impl AsRef<Path>) -> Result<World> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_world(&text, &path.display().to_string())
}

/// Parse and validate a world; `source` names the input in error messages.
pub fn parse_world(text: &str, source: &str) -> Result<World> {
    let mut parts = WorldParts::default();
    // edges whose length is filled in once all nodes are known
    let mut pending_edges = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: source.to_string(),
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let (kind, rest) = fields.split_first().expect("split yields at least one field");
        let expect_len = |n: usize| -> Result<()> {
            if rest.len() == n {
                Ok(())
            } else {
                Err(err(format!("`{kind}` expects {n} fields, found {}", rest.len())))
            }
        };
        match *kind {
            "node" => {
                expect_len(3)?;
                parts.nodes.push((
                    NodeId(num(rest[0], "node id").map_err(err)?),
                    point(rest[1], rest[2]).map_err(err)?,
                ));
            }
            "edge" => {
                if !(rest.len() == 2 || rest.len() == 3) {
                    return Err(err(format!("`edge` expects 2 or 3 fields, found {}", rest.len())));
                }
                let a = NodeId(num(rest[0], "edge endpoint").map_err(err)?);
                let b = NodeId(num(rest[1], "edge endpoint").map_err(err)?);
                let length = match rest.get(2) {
                    Some(s) => Some(num::<f64>(s, "edge length").map_err(err)?),
                    None => None,
                };
                pending_edges.push((line_no, a, b, length));
            }
            "building" => {
                expect_len(3)?;
                parts.buildings.push(Building {
                    id: BuildingId(num(rest[0], "building id").map_err(err)?),
                    location: point(rest[1], rest[2]).map_err(err)?,
                });
            }
            "waterway" => {
                if rest.len() < 5 || rest.len() % 2 == 0 {
                    return Err(err("`waterway` expects an id followed by at least two x|y pairs".into()));
                }
                let id = WaterwayId(num(rest[0], "waterway id").map_err(err)?);
                let points = rest[1..]
                    .chunks(2)
                    .map(|c| point(c[0], c[1]))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(err)?;
                parts.waterways.push(Waterway { id, points });
            }
            "shelter" => {
                expect_len(4)?;
                let id = ShelterId(num(rest[0], "shelter id").map_err(err)?);
                let node = NodeId(num(rest[1], "shelter node").map_err(err)?);
                let capacity = match (rest[3], rest[2]) {
                    ("external", "unbounded") => Capacity::Unbounded,
                    ("external", other) => {
                        return Err(err(format!(
                            "external shelter {id} must have capacity `unbounded`, found `{other}`"
                        )))
                    }
                    ("internal", "unbounded") => {
                        return Err(err(format!("internal shelter {id} needs a finite capacity")))
                    }
                    ("internal", cap) => Capacity::Limited(num(cap, "shelter capacity").map_err(err)?),
                    (flag, _) => {
                        return Err(err(format!(
                            "shelter flag must be `internal` or `external`, found `{flag}`"
                        )))
                    }
                };
                parts.shelters.push(Shelter { id, node, capacity });
            }
            "rescuer_start" => {
                expect_len(1)?;
                parts
                    .rescuer_starts
                    .push(NodeId(num(rest[0], "rescuer start node").map_err(err)?));
            }
            other => return Err(err(format!("unknown record kind `{other}`"))),
        }
    }

    let points: HashMap<NodeId, Point> = parts.nodes.iter().copied().collect();
    for (line, a, b, length) in pending_edges {
        let length = match length {
            Some(l) => l,
            None => match (points.get(&a), points.get(&b)) {
                (Some(pa), Some(pb)) => pa.distance(pb),
                _ => {
                    return Err(Error::Parse {
                        path: source.to_string(),
                        line,
                        message: format!("edge {a}-{b} references an unknown node"),
                    })
                }
            },
        };
        parts.edges.push(Edge { a, b, length });
    }

    World::new(parts)
}

fn num<T: FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad {what} `{s}`"))
}

fn point(x: &str, y: &str) -> std::result::Result<Point, String> {
    let p = Point::new(num(x, "x coordinate")?, num(y, "y coordinate")?);
    if p.is_finite() {
        Ok(p)
    } else {
        Err(format!("non-finite coordinate `{x}|{y}`"))
    }
}

pub(super) fn write_world(world: &World) -> String {
    let parts = world.parts();
    let mut out = String::new();
    // f64 Display prints the shortest representation that parses back exactly.
    for (id, p) in &parts.nodes {
        writeln!(out, "node|{id}|{}|{}", p.x, p.y).unwrap();
    }
    for e in &parts.edges {
        writeln!(out, "edge|{}|{}|{}", e.a, e.b, e.length).unwrap();
    }
    for b in &parts.buildings {
        writeln!(out, "building|{}|{}|{}", b.id, b.location.x, b.location.y).unwrap();
    }
    for w in &parts.waterways {
        write!(out, "waterway|{}", w.id).unwrap();
        for p in &w.points {
            write!(out, "|{}|{}", p.x, p.y).unwrap();
        }
        out.push('\n');
    }
    for s in &parts.shelters {
        match s.capacity {
            Capacity::Limited(c) => writeln!(out, "shelter|{}|{}|{c}|internal", s.id, s.node),
            Capacity::Unbounded => writeln!(out, "shelter|{}|{}|unbounded|external", s.id, s.node),
        }
        .unwrap();
    }
    for n in &parts.rescuer_starts {
        writeln!(out, "rescuer_start|{n}").unwrap();
    }
    out
}
