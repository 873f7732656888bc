//! Spatial world: road graph, buildings, waterways and evacuation shelters.
//!
//! Coordinates are planar projected meters. A [`World`] is validated on
//! construction and immutable afterwards, so it can be shared freely between
//! concurrent simulation runs.

mod format;
mod routing;

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::{Error, Result};

pub use format::{load_world, parse_world};
pub use routing::{DistanceField, Route};

/// Maximum allowed gap between a declared edge length and the Euclidean
/// distance of its endpoints.
pub const EDGE_LENGTH_TOLERANCE: f64 = 1e-6;

/// Upper bound (inclusive) of the `Within` proximity class, in meters.
pub const WITHIN_CUTOFF: f64 = 10.0;
/// Upper bound (inclusive) of the `Near` proximity class, in meters.
pub const NEAR_CUTOFF: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Point a fraction `t` of the way from `self` to `other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Road graph node identifier.
    NodeId
);
id_type!(BuildingId);
id_type!(ShelterId);
id_type!(WaterwayId);

#[derive(Debug, Clone, PartialEq)]
pub struct Building {
    pub id: BuildingId,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waterway {
    pub id: WaterwayId,
    pub points: Vec<Point>,
}

/// Shelter capacity in persons. External shelters (outside the village) are
/// the only ones without a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Limited(u32),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shelter {
    pub id: ShelterId,
    pub node: NodeId,
    pub capacity: Capacity,
}

impl Shelter {
    pub fn is_external(&self) -> bool {
        self.capacity == Capacity::Unbounded
    }

    /// Whether `persons` more people fit given the current occupancy.
    pub fn fits(&self, occupancy: u32, persons: u32) -> bool {
        match self.capacity {
            Capacity::Unbounded => true,
            Capacity::Limited(cap) => u64::from(occupancy) + u64::from(persons) <= u64::from(cap),
        }
    }
}

/// Hazard proximity class with its coded risk value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProximityClass {
    Within,
    Near,
    Far,
}

impl ProximityClass {
    pub fn code(self) -> f64 {
        match self {
            ProximityClass::Within => 1.0,
            ProximityClass::Near => 0.5,
            ProximityClass::Far => 0.25,
        }
    }
}

/// Classify a distance to the nearest hazard source.
pub fn classify_proximity(distance: f64) -> Result<ProximityClass> {
    if distance.is_nan() || distance < 0.0 {
        return Err(Error::InvalidInput(format!(
            "hazard distance must be a non-negative number, got {distance}"
        )));
    }
    Ok(if distance <= WITHIN_CUTOFF {
        ProximityClass::Within
    } else if distance <= NEAR_CUTOFF {
        ProximityClass::Near
    } else {
        ProximityClass::Far
    })
}

/// Raw world contents prior to validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldParts {
    pub nodes: Vec<(NodeId, Point)>,
    pub edges: Vec<Edge>,
    pub buildings: Vec<Building>,
    pub waterways: Vec<Waterway>,
    pub shelters: Vec<Shelter>,
    pub rescuer_starts: Vec<NodeId>,
}

/// A validated, immutable spatial scene.
#[derive(Debug, Clone)]
pub struct World {
    parts: WorldParts,
    /// Node ids sorted ascending; dense indices follow this order, so
    /// comparing indices is the same as comparing ids.
    node_ids: Vec<NodeId>,
    node_points: Vec<Point>,
    node_index: HashMap<NodeId, usize>,
    /// Neighbors per node as (index, length), sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl World {
    /// Validate `parts` and build the routing structures.
    pub fn new(parts: WorldParts) -> Result<Self> {
        if parts.nodes.is_empty() {
            return Err(Error::validation("world", "road graph has no nodes"));
        }

        let mut order: Vec<usize> = (0..parts.nodes.len()).collect();
        order.sort_by_key(|&i| parts.nodes[i].0);
        let mut node_ids = Vec::with_capacity(order.len());
        let mut node_points = Vec::with_capacity(order.len());
        let mut node_index = HashMap::with_capacity(order.len());
        for i in order {
            let (id, p) = parts.nodes[i];
            if !p.is_finite() {
                return Err(Error::validation(
                    "world",
                    format!("node {id} has non-finite coordinates"),
                ));
            }
            if node_index.insert(id, node_ids.len()).is_some() {
                return Err(Error::validation("world", format!("duplicate node id {id}")));
            }
            node_ids.push(id);
            node_points.push(p);
        }

        let mut adjacency = vec![Vec::new(); node_ids.len()];
        let mut seen_edges = HashSet::new();
        for e in &parts.edges {
            let (Some(&a), Some(&b)) = (node_index.get(&e.a), node_index.get(&e.b)) else {
                return Err(Error::validation(
                    "world",
                    format!("edge {}-{} references an unknown node", e.a, e.b),
                ));
            };
            if a == b {
                return Err(Error::validation(
                    "world",
                    format!("edge {}-{} is a self-loop", e.a, e.b),
                ));
            }
            if !seen_edges.insert((a.min(b), a.max(b))) {
                return Err(Error::validation("world", format!("duplicate edge {}-{}", e.a, e.b)));
            }
            let euclid = node_points[a].distance(&node_points[b]);
            if !(e.length.is_finite() && (e.length - euclid).abs() <= EDGE_LENGTH_TOLERANCE) {
                return Err(Error::validation(
                    "world",
                    format!(
                        "edge {}-{} length {} differs from endpoint distance {euclid}",
                        e.a, e.b, e.length
                    ),
                ));
            }
            if e.length <= 0.0 {
                return Err(Error::validation(
                    "world",
                    format!("edge {}-{} has zero length", e.a, e.b),
                ));
            }
            adjacency[a].push((b, e.length));
            adjacency[b].push((a, e.length));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }

        let mut building_ids = HashSet::new();
        for b in &parts.buildings {
            if !b.location.is_finite() {
                return Err(Error::validation(
                    "world",
                    format!("building {} has non-finite coordinates", b.id),
                ));
            }
            if !building_ids.insert(b.id) {
                return Err(Error::validation("world", format!("duplicate building id {}", b.id)));
            }
        }

        let mut waterway_ids = HashSet::new();
        for w in &parts.waterways {
            if w.points.len() < 2 {
                return Err(Error::validation(
                    "world",
                    format!("waterway {} needs at least two points", w.id),
                ));
            }
            if w.points.iter().any(|p| !p.is_finite()) {
                return Err(Error::validation(
                    "world",
                    format!("waterway {} has non-finite coordinates", w.id),
                ));
            }
            if !waterway_ids.insert(w.id) {
                return Err(Error::validation("world", format!("duplicate waterway id {}", w.id)));
            }
        }

        let mut shelter_ids = HashSet::new();
        for s in &parts.shelters {
            if !shelter_ids.insert(s.id) {
                return Err(Error::validation("world", format!("duplicate shelter id {}", s.id)));
            }
            if !node_index.contains_key(&s.node) {
                return Err(Error::validation(
                    "world",
                    format!("shelter {} sits on unknown node {}", s.id, s.node),
                ));
            }
            if s.capacity == Capacity::Limited(0) {
                return Err(Error::validation(
                    "world",
                    format!("shelter {} capacity must be > 0", s.id),
                ));
            }
        }
        for n in &parts.rescuer_starts {
            if !node_index.contains_key(n) {
                return Err(Error::validation("world", format!("rescuer start on unknown node {n}")));
            }
        }

        let world = World {
            parts,
            node_ids,
            node_points,
            node_index,
            adjacency,
        };
        world.check_connectivity()?;
        Ok(world)
    }

    /// All shelter nodes and rescuer starts must share one component.
    fn check_connectivity(&self) -> Result<()> {
        let anchors: Vec<(String, usize)> = self
            .parts
            .shelters
            .iter()
            .map(|s| (format!("shelter {}", s.id), self.node_index[&s.node]))
            .chain(
                self.parts
                    .rescuer_starts
                    .iter()
                    .map(|n| (format!("rescuer start {n}"), self.node_index[n])),
            )
            .collect();
        let Some((_, root)) = anchors.first() else {
            return Ok(());
        };
        let reach = self.component_of(*root);
        for (label, idx) in &anchors {
            if !reach[*idx] {
                return Err(Error::validation(
                    "world",
                    format!(
                        "{label} (node {}) is disconnected from {}",
                        self.node_ids[*idx], anchors[0].0
                    ),
                ));
            }
        }
        Ok(())
    }

    fn component_of(&self, root: usize) -> Vec<bool> {
        let mut seen = vec![false; self.node_ids.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    pub fn parts(&self) -> &WorldParts {
        &self.parts
    }

    pub fn buildings(&self) -> &[Building] {
        &self.parts.buildings
    }

    pub fn edges(&self) -> &[Edge] {
        &self.parts.edges
    }

    pub fn waterways(&self) -> &[Waterway] {
        &self.parts.waterways
    }

    pub fn shelters(&self) -> &[Shelter] {
        &self.parts.shelters
    }

    pub fn rescuer_starts(&self) -> &[NodeId] {
        &self.parts.rescuer_starts
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn node_point(&self, id: NodeId) -> Option<Point> {
        self.node_index.get(&id).map(|&i| self.node_points[i])
    }

    pub fn building(&self, id: BuildingId) -> Option<&Building> {
        self.parts.buildings.iter().find(|b| b.id == id)
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub(crate) fn id_at(&self, index: usize) -> NodeId {
        self.node_ids[index]
    }

    pub(crate) fn point_at(&self, index: usize) -> Point {
        self.node_points[index]
    }

    pub(crate) fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    /// Node closest to `p`; ties go to the lowest node id.
    pub fn nearest_road_node(&self, p: Point) -> NodeId {
        self.node_ids[self.nearest_node_index(p)]
    }

    pub(crate) fn nearest_node_index(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.node_points.iter().enumerate() {
            let d = p.distance(q);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Minimum distance from `p` to any waterway.
    pub fn hazard_distance(&self, p: Point) -> Result<f64> {
        if self.parts.waterways.is_empty() {
            return Err(Error::validation(
                "world",
                "no waterways defined; hazard proximity is undefined",
            ));
        }
        Ok(self
            .parts
            .waterways
            .iter()
            .map(|w| polyline_distance(p, &w.points))
            .fold(f64::INFINITY, f64::min))
    }

    /// Proximity class of `p` relative to the nearest waterway.
    pub fn proximity(&self, p: Point) -> Result<ProximityClass> {
        classify_proximity(self.hazard_distance(p)?)
    }

    /// Serialize to the plain-text world format.
    pub fn to_text(&self) -> String {
        format::write_world(self)
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&a.lerp(&b, t))
}

pub fn polyline_distance(p: Point, points: &[Point]) -> f64 {
    match points {
        [] => f64::INFINITY,
        [only] => p.distance(only),
        _ => points
            .windows(2)
            .map(|w| segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line_world() -> World {
        let nodes = vec![(NodeId(0), Point::new(0.0, 0.0)), (NodeId(1), Point::new(100.0, 0.0))];
        World::new(WorldParts {
            nodes,
            edges: vec![Edge {
                a: NodeId(0),
                b: NodeId(1),
                length: 100.0,
            }],
            buildings: vec![Building {
                id: BuildingId(1),
                location: Point::new(10.0, 5.0),
            }],
            waterways: vec![Waterway {
                id: WaterwayId(0),
                points: vec![Point::new(0.0, 20.0), Point::new(100.0, 20.0)],
            }],
            shelters: vec![Shelter {
                id: ShelterId(0),
                node: NodeId(1),
                capacity: Capacity::Limited(10),
            }],
            rescuer_starts: vec![NodeId(0)],
        })
        .unwrap()
    }

    #[test]
    fn proximity_cutoffs() {
        assert_eq!(classify_proximity(5.0).unwrap(), ProximityClass::Within);
        assert_eq!(classify_proximity(10.0).unwrap(), ProximityClass::Within);
        assert_eq!(classify_proximity(30.0).unwrap(), ProximityClass::Near);
        assert_eq!(classify_proximity(50.0).unwrap(), ProximityClass::Near);
        assert_eq!(classify_proximity(120.0).unwrap(), ProximityClass::Far);
        assert_eq!(ProximityClass::Within.code(), 1.0);
        assert_eq!(ProximityClass::Near.code(), 0.5);
        assert_eq!(ProximityClass::Far.code(), 0.25);
        assert!(classify_proximity(-1.0).is_err());
        assert!(classify_proximity(f64::NAN).is_err());
    }

    #[test]
    fn nearest_node_ties_to_lowest_id() {
        let mut parts = line_world().parts().clone();
        parts.nodes = vec![(NodeId(7), Point::new(10.0, 0.0)), (NodeId(3), Point::new(-10.0, 0.0))];
        parts.edges = vec![Edge {
            a: NodeId(3),
            b: NodeId(7),
            length: 20.0,
        }];
        parts.shelters[0].node = NodeId(7);
        parts.rescuer_starts = vec![NodeId(3)];
        let w = World::new(parts).unwrap();
        assert_eq!(w.nearest_road_node(Point::new(0.0, 4.0)), NodeId(3));
        assert_eq!(w.nearest_road_node(Point::new(10.0, 0.0)), NodeId(7));
    }

    #[test]
    fn hazard_distance_geometry() {
        let w = line_world();
        assert_eq!(w.hazard_distance(Point::new(0.0, 20.0)).unwrap(), 0.0);
        assert!((w.hazard_distance(Point::new(50.0, 15.0)).unwrap() - 5.0).abs() < 1e-12);
        // beyond the segment end the distance is to the endpoint
        assert!((w.hazard_distance(Point::new(103.0, 24.0)).unwrap() - 5.0).abs() < 1e-12);

        let mut parts = w.parts().clone();
        parts.waterways.clear();
        let dry = World::new(parts).unwrap();
        assert!(dry.hazard_distance(Point::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn rejects_zero_capacity() {
        let mut parts = line_world().parts().clone();
        parts.shelters[0].capacity = Capacity::Limited(0);
        let err = World::new(parts).unwrap_err().to_string();
        assert!(err.contains("capacity"), "{err}");
    }

    #[test]
    fn rejects_bad_edge_length() {
        let mut parts = line_world().parts().clone();
        parts.edges[0].length = 100.01;
        assert!(World::new(parts).is_err());
    }

    #[test]
    fn rejects_disconnected_shelter() {
        let mut parts = line_world().parts().clone();
        parts.nodes.push((NodeId(2), Point::new(500.0, 0.0)));
        parts.shelters.push(Shelter {
            id: ShelterId(9),
            node: NodeId(2),
            capacity: Capacity::Unbounded,
        });
        let err = World::new(parts).unwrap_err().to_string();
        assert!(err.contains("shelter 9") && err.contains("disconnected"), "{err}");
    }
}
