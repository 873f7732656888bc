use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NodeId, World};
use crate::{Error, Result};

/// A shortest path over the road graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    /// Sum of edge lengths along `nodes`, in meters.
    pub length: f64,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    distance: f64,
    node: usize,
}

impl Eq for HeapEntry {}

// std's BinaryHeap is a max-heap; reverse so the closest node pops first.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .distance
            .total_cmp(&self.distance)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Road distances from every node to one target node.
///
/// Built once per target and reused to extract paths from any origin.
#[derive(Debug, Clone)]
pub struct DistanceField {
    target: usize,
    distances: Vec<f64>,
}

impl DistanceField {
    pub fn new(world: &World, target: NodeId) -> Result<Self> {
        let target = world
            .index_of(target)
            .ok_or_else(|| Error::InvalidInput(format!("unknown node {target}")))?;
        Ok(Self::from_index(world, target))
    }

    pub(crate) fn from_index(world: &World, target: usize) -> Self {
        let mut distances = vec![f64::INFINITY; world.node_count()];
        let mut heap = BinaryHeap::new();
        distances[target] = 0.0;
        heap.push(HeapEntry {
            distance: 0.0,
            node: target,
        });
        while let Some(HeapEntry { distance, node }) = heap.pop() {
            if distance > distances[node] {
                continue;
            }
            for &(next, len) in world.neighbors(node) {
                let candidate = distance + len;
                if candidate < distances[next] {
                    distances[next] = candidate;
                    heap.push(HeapEntry {
                        distance: candidate,
                        node: next,
                    });
                }
            }
        }
        DistanceField { target, distances }
    }

    /// Road distance from `node` to the target, infinite when unreachable.
    pub fn distance_from(&self, world: &World, node: NodeId) -> Option<f64> {
        world.index_of(node).map(|i| self.distances[i])
    }

    pub(crate) fn distance_at(&self, index: usize) -> f64 {
        self.distances[index]
    }

    /// Shortest path from `from` to the target as dense indices.
    ///
    /// Among equally short paths the lexicographically smallest node
    /// sequence wins: from each node we step to the lowest-id neighbor that
    /// lies on some shortest path.
    pub(crate) fn path_indices(&self, world: &World, from: usize) -> Option<Vec<usize>> {
        if !self.distances[from].is_finite() {
            return None;
        }
        let mut path = vec![from];
        let mut current = from;
        while current != self.target {
            let here = self.distances[current];
            let tolerance = 1e-9 * here.max(1.0);
            let next = world
                .neighbors(current)
                .iter()
                .find(|&&(n, len)| {
                    let d = self.distances[n];
                    d < here && (d + len - here).abs() <= tolerance
                })
                .map(|&(n, _)| n)?;
            path.push(next);
            current = next;
        }
        Some(path)
    }

    pub fn route_from(&self, world: &World, from: NodeId) -> Result<Option<Route>> {
        let from = world
            .index_of(from)
            .ok_or_else(|| Error::InvalidInput(format!("unknown node {from}")))?;
        Ok(self.path_indices(world, from).map(|p| route_from_indices(world, &p)))
    }
}

pub(crate) fn route_from_indices(world: &World, path: &[usize]) -> Route {
    let length = path
        .windows(2)
        .map(|w| {
            world
                .neighbors(w[0])
                .iter()
                .find(|&&(n, _)| n == w[1])
                .map(|&(_, len)| len)
                .expect("consecutive path nodes share an edge")
        })
        .sum();
    Route {
        length,
        nodes: path.iter().map(|&i| world.id_at(i)).collect(),
    }
}

impl World {
    /// Shortest road path between two nodes; `Ok(None)` when unreachable.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Result<Option<Route>> {
        if self.index_of(from).is_none() {
            return Err(Error::InvalidInput(format!("unknown node {from}")));
        }
        DistanceField::new(self, to)?.route_from(self, from)
    }
}
