//! Node placement and unit-disk connectivity over a snapshot of positions.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::engine::{RngStream, StreamName};
use crate::scenario::Scenario;

/// Placement attempts before giving up when a connected deployment is required.
pub const MAX_PLACEMENT_ATTEMPTS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Coordinates in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("topology has no nodes")]
    Empty,
    #[error("no connected deployment found after {0} attempts")]
    NoConnectedDeployment(u64),
}

/// Positions plus the unit-disk adjacency they induce.
///
/// Two distinct nodes are adjacent iff their distance is at most the radio
/// range (a tie at exactly the range counts as connected).
#[derive(Clone, Debug)]
pub struct TopologySnapshot {
    positions: Vec<Position>,
    adjacency: Vec<Vec<NodeId>>,
    radio_range: f64,
}

impl TopologySnapshot {
    pub fn from_positions(positions: Vec<Position>, radio_range: f64) -> Self {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                if positions[a].distance(&positions[b]) <= radio_range {
                    adjacency[a].push(NodeId(b as u32));
                    adjacency[b].push(NodeId(a as u32));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            positions,
            adjacency,
            radio_range,
        }
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len() as u32).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.positions.len()
    }

    pub fn position(&self, node: NodeId) -> Result<Position, TopologyError> {
        self.positions
            .get(node.index())
            .copied()
            .ok_or(TopologyError::UnknownNode(node))
    }

    /// Sorted 1-hop neighbors.
    pub fn neighbors(&self, node: NodeId) -> Result<&[NodeId], TopologyError> {
        self.adjacency
            .get(node.index())
            .map(Vec::as_slice)
            .ok_or(TopologyError::UnknownNode(node))
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency
            .get(a.index())
            .is_some_and(|list| list.binary_search(&b).is_ok())
    }

    /// Nodes within `k` hops of `node`, excluding `node` itself.
    pub fn k_hop_neighbors(&self, node: NodeId, k: usize) -> Result<BTreeSet<NodeId>, TopologyError> {
        if !self.contains(node) {
            return Err(TopologyError::UnknownNode(node));
        }
        let mut reached = BTreeSet::new();
        let mut frontier = vec![node];
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u.index()] {
                    if v != node && reached.insert(v) {
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(reached)
    }

    /// Connected component containing `node`, including `node`.
    pub fn component_of(&self, node: NodeId) -> Result<BTreeSet<NodeId>, TopologyError> {
        if !self.contains(node) {
            return Err(TopologyError::UnknownNode(node));
        }
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([node]);
        seen[node.index()] = true;
        let mut out = BTreeSet::new();
        while let Some(u) = queue.pop_front() {
            out.insert(u);
            for &v in &self.adjacency[u.index()] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    queue.push_back(v);
                }
            }
        }
        Ok(out)
    }

    pub fn is_connected(&self) -> Result<bool, TopologyError> {
        if self.positions.is_empty() {
            return Err(TopologyError::Empty);
        }
        Ok(self.component_of(NodeId(0))?.len() == self.node_count())
    }
}

/// Draws `count` positions uniformly over a `width` x `height` rectangle.
pub fn uniform_positions<R: Rng + ?Sized>(
    width: f64,
    height: f64,
    count: usize,
    rng: &mut R,
) -> Vec<Position> {
    (0..count)
        .map(|_| Position::new(rng.gen::<f64>() * width, rng.gen::<f64>() * height))
        .collect()
}

/// Random deployment for `scenario`, drawn from the placement stream.
///
/// With `require_connected`, successive attempts are drawn until one yields a
/// connected unit-disk graph.
pub fn place_nodes(scenario: &Scenario, stream: &RngStream) -> Result<TopologySnapshot, TopologyError> {
    debug_assert_eq!(stream.name(), StreamName::Placement);
    let attempts = if scenario.require_connected {
        MAX_PLACEMENT_ATTEMPTS
    } else {
        1
    };
    for attempt in 0..attempts {
        let mut rng = stream.fork(&[attempt]);
        let positions = uniform_positions(
            scenario.area_width,
            scenario.area_height,
            scenario.node_count,
            &mut rng,
        );
        let topo = TopologySnapshot::from_positions(positions, scenario.radio_range);
        if !scenario.require_connected || topo.is_connected()? {
            return Ok(topo);
        }
    }
    Err(TopologyError::NoConnectedDeployment(attempts))
}
