//! Node motion and hello-based neighbor discovery.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::engine::{RngStream, SimTime};
use crate::topology::{NodeId, Position};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MobilityKind {
    Static,
    RandomWaypoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobilityConfig {
    pub kind: MobilityKind,
    /// Mean node speed in m/s; per-leg speeds are uniform in `[0.5, 1.5] x mean`.
    pub mean_speed: f64,
    pub pause_time: f64,
    pub hello_period: f64,
    /// Only used for position traces; motion itself is closed-form.
    pub position_update_period: f64,
    /// Neighbor entries expire after `expiry_factor * hello_period`.
    pub expiry_factor: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            kind: MobilityKind::Static,
            mean_speed: 0.0,
            pause_time: 0.0,
            hello_period: 1.0,
            position_update_period: 1.0,
            expiry_factor: 2.5,
        }
    }
}

impl MobilityConfig {
    pub fn random_waypoint(mean_speed: f64) -> Self {
        Self {
            kind: MobilityKind::RandomWaypoint,
            mean_speed,
            ..Self::default()
        }
    }

    pub fn expiry(&self) -> f64 {
        self.expiry_factor * self.hello_period
    }

    /// Speed reported in result rows (0 for static deployments).
    pub fn reported_speed(&self) -> f64 {
        match self.kind {
            MobilityKind::Static => 0.0,
            MobilityKind::RandomWaypoint => self.mean_speed,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Leg {
    depart: SimTime,
    arrive: SimTime,
    from: Position,
    to: Position,
}

/// Closed-form trajectories for every node up to a time horizon.
#[derive(Clone, Debug)]
pub struct Motion {
    initial: Vec<Position>,
    legs: Vec<Vec<Leg>>,
}

impl Motion {
    pub fn fixed(initial: Vec<Position>) -> Self {
        let legs = vec![Vec::new(); initial.len()];
        Self { initial, legs }
    }

    /// Random waypoint motion starting from `initial` and covering `[0, horizon]`.
    ///
    /// Each node picks a uniform waypoint in the area, travels there in a
    /// straight line at a uniform speed from `[0.5, 1.5) x mean_speed`, pauses,
    /// and repeats.
    pub fn random_waypoint(
        initial: Vec<Position>,
        cfg: &MobilityConfig,
        width: f64,
        height: f64,
        horizon: SimTime,
        stream: &RngStream,
    ) -> Self {
        if cfg.kind == MobilityKind::Static || cfg.mean_speed <= 0.0 {
            return Self::fixed(initial);
        }
        let legs = initial
            .iter()
            .enumerate()
            .map(|(i, &start)| {
                let mut rng = stream.fork(&[i as u64, 0x11e9]);
                let mut legs = Vec::new();
                let mut t = 0.0;
                let mut here = start;
                while t <= horizon {
                    let to = Position::new(rng.gen::<f64>() * width, rng.gen::<f64>() * height);
                    let speed = cfg.mean_speed * rng.gen_range(0.5..1.5);
                    let travel = here.distance(&to) / speed;
                    legs.push(Leg {
                        depart: t,
                        arrive: t + travel,
                        from: here,
                        to,
                    });
                    t += travel + cfg.pause_time;
                    here = to;
                }
                legs
            })
            .collect();
        Self { initial, legs }
    }

    pub fn node_count(&self) -> usize {
        self.initial.len()
    }

    pub fn is_static(&self) -> bool {
        self.legs.iter().all(Vec::is_empty)
    }

    pub fn position_at(&self, node: NodeId, time: SimTime) -> Position {
        let legs = &self.legs[node.index()];
        let idx = legs.partition_point(|l| l.depart <= time);
        if idx == 0 {
            return self.initial[node.index()];
        }
        let leg = &legs[idx - 1];
        if time >= leg.arrive {
            return leg.to;
        }
        let f = (time - leg.depart) / (leg.arrive - leg.depart);
        Position::new(
            leg.from.x + f * (leg.to.x - leg.from.x),
            leg.from.y + f * (leg.to.y - leg.from.y),
        )
    }

    pub fn positions_at(&self, time: SimTime) -> Vec<Position> {
        (0..self.initial.len() as u32)
            .map(|i| self.position_at(NodeId(i), time))
            .collect()
    }

    /// Total path length and time in motion over `[0, until]`.
    pub fn travel_stats(&self, node: NodeId, until: SimTime) -> (f64, f64) {
        let mut dist = 0.0;
        let mut moving = 0.0;
        for leg in &self.legs[node.index()] {
            if leg.depart >= until {
                break;
            }
            let end = leg.arrive.min(until);
            let dur = leg.arrive - leg.depart;
            if dur > 0.0 {
                dist += leg.from.distance(&leg.to) * (end - leg.depart) / dur;
                moving += end - leg.depart;
            }
        }
        (dist, moving)
    }
}

/// A neighbor announcement: the sender and its current 1-hop list.
#[derive(Clone, Debug, PartialEq)]
pub struct HelloPacket {
    pub sender: NodeId,
    pub neighbors: Vec<NodeId>,
}

/// Possibly stale view of the 1- and 2-hop neighborhood built from hellos.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeighborTable {
    owner: Option<NodeId>,
    one_hop: BTreeMap<NodeId, SimTime>,
    two_hop: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl NeighborTable {
    pub fn new(owner: NodeId) -> Self {
        Self {
            owner: Some(owner),
            ..Self::default()
        }
    }

    /// Table with exact knowledge taken from a topology snapshot.
    pub fn from_topology(owner: NodeId, topo: &crate::topology::TopologySnapshot, now: SimTime) -> Self {
        let mut table = Self::new(owner);
        for &n in topo.neighbors(owner).unwrap_or(&[]) {
            let list = topo.neighbors(n).unwrap_or(&[]).to_vec();
            table.on_hello(&HelloPacket { sender: n, neighbors: list }, now);
        }
        table
    }

    pub fn owner(&self) -> Option<NodeId> {
        self.owner
    }

    pub fn on_hello(&mut self, hello: &HelloPacket, now: SimTime) {
        if Some(hello.sender) == self.owner {
            return;
        }
        self.one_hop.insert(hello.sender, now);
        self.two_hop
            .insert(hello.sender, hello.neighbors.iter().copied().collect());
    }

    /// Builds the hello this table's owner would send.
    pub fn emit_hello(&self) -> HelloPacket {
        HelloPacket {
            sender: self.owner.expect("hello needs an owned table"),
            neighbors: self.one_hop.keys().copied().collect(),
        }
    }

    pub fn last_heard(&self, node: NodeId) -> Option<SimTime> {
        self.one_hop.get(&node).copied()
    }

    pub fn one_hop(&self) -> BTreeSet<NodeId> {
        self.one_hop.keys().copied().collect()
    }

    pub fn is_neighbor(&self, node: NodeId) -> bool {
        self.one_hop.contains_key(&node)
    }

    pub fn one_hop_len(&self) -> usize {
        self.one_hop.len()
    }

    /// The 1-hop list `node` last reported, if `node` is a known neighbor.
    pub fn neighbors_of(&self, node: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.two_hop.get(&node)
    }

    /// Everything within two hops according to the table, owner excluded.
    pub fn within_two_hops(&self) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.one_hop.keys().copied().collect();
        for list in self.two_hop.values() {
            out.extend(list.iter().copied());
        }
        if let Some(owner) = self.owner {
            out.remove(&owner);
        }
        out
    }

    /// Nodes exactly two hops away according to the table.
    pub fn strict_two_hop(&self) -> BTreeSet<NodeId> {
        let mut out = self.within_two_hops();
        for n in self.one_hop.keys() {
            out.remove(n);
        }
        out
    }

    /// Whether the table believes `a` and `b` are neighbors of each other.
    pub fn believes_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.two_hop.get(&a).is_some_and(|l| l.contains(&b))
            || self.two_hop.get(&b).is_some_and(|l| l.contains(&a))
    }

    /// Drops entries last heard before `now - expiry`, with their 2-hop lists.
    pub fn expire(&mut self, now: SimTime, expiry: SimTime) {
        let cutoff = now - expiry;
        let stale: Vec<NodeId> = self
            .one_hop
            .iter()
            .filter(|(_, &t)| t < cutoff)
            .map(|(&n, _)| n)
            .collect();
        for n in stale {
            self.one_hop.remove(&n);
            self.two_hop.remove(&n);
        }
    }
}

/// Copy of `table` with stale entries removed.
pub fn expire_neighbors(table: &NeighborTable, now: SimTime, expiry: SimTime) -> NeighborTable {
    let mut out = table.clone();
    out.expire(now, expiry);
    out
}
