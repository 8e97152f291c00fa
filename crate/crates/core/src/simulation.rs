//! One simulated deployment: a sequence of NWBs over a (possibly moving)
//! topology, with periodic hellos when the protocol needs neighbor tables.
//!
//! NWBs are originated `nwb_spacing` apart after a warm-up period. Only one
//! NWB is active at a time; an NWB that still has events pending when the
//! next one starts (or when the run ends) is flagged as non-quiescent and its
//! leftover events are discarded.

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{Dispatched, RngStream, Scheduler, SimTime, StreamName, TimerHandle};
use crate::metrics::NwbTrace;
use crate::mobility::{HelloPacket, Motion, NeighborTable};
use crate::protocols::{self, Action, NodeContext, NwbId, NwbPacket, PolicyDecision, ProtocolKind, ProtocolState, Reaction};
use crate::radio::{self, PacketClass};
use crate::scenario::{InvalidScenario, Scenario};
use crate::sr;
use crate::topology::{self, NodeId, Position, TopologyError, TopologySnapshot};

/// Delay between a transmission and its reception.
pub const PROPAGATION_DELAY: SimTime = 1e-6;

const HELLO_KEY: u64 = 0x4845_4c4c_4f00_0000;
const PHASE_KEY: u64 = 0x5048_4153_4500_0000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    InvalidScenario(#[from] InvalidScenario),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("expected {expected} explicit positions, got {got}")]
    PositionCount { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Copy {
    Base,
    Sr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimerKind {
    Assess,
    Sr,
}

#[derive(Clone, Debug)]
pub enum Packet {
    Nwb { nwb: u32, packet: Rc<NwbPacket> },
    Hello(Rc<HelloPacket>),
}

#[derive(Clone, Debug)]
pub enum Event {
    NwbOriginate { nwb: u32, origin: NodeId },
    TransmitStart { nwb: u32, node: NodeId, copy: Copy },
    Receive { node: NodeId, packet: Packet },
    TimerFire { nwb: u32, node: NodeId, timer: TimerKind },
    HelloTick { node: NodeId, round: u64 },
    MobilityUpdate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    NwbOriginate,
    TransmitStart,
    Receive,
    TimerFire,
    HelloTick,
    MobilityUpdate,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::NwbOriginate { .. } => EventKind::NwbOriginate,
            Event::TransmitStart { .. } => EventKind::TransmitStart,
            Event::Receive { .. } => EventKind::Receive,
            Event::TimerFire { .. } => EventKind::TimerFire,
            Event::HelloTick { .. } => EventKind::HelloTick,
            Event::MobilityUpdate => EventKind::MobilityUpdate,
        }
    }

    fn node(&self) -> Option<NodeId> {
        match self {
            Event::NwbOriginate { origin, .. } => Some(*origin),
            Event::TransmitStart { node, .. }
            | Event::Receive { node, .. }
            | Event::TimerFire { node, .. }
            | Event::HelloTick { node, .. } => Some(*node),
            Event::MobilityUpdate => None,
        }
    }

    fn nwb(&self) -> Option<u32> {
        match self {
            Event::TransmitStart { nwb, .. } | Event::TimerFire { nwb, .. } => Some(*nwb),
            Event::Receive { packet: Packet::Nwb { nwb, .. }, .. } => Some(*nwb),
            _ => None,
        }
    }
}

/// One dispatched event, as recorded in the optional event trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
    pub node: Option<NodeId>,
}

/// Everything observed about one NWB.
#[derive(Clone, Debug, PartialEq)]
pub struct NwbOutcome {
    pub trace: NwbTrace,
    pub covered_nodes: Vec<NodeId>,
    /// Transmissions per node, base and SR combined.
    pub tx_per_node: Vec<u32>,
    pub sr_transmissions: u32,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub initial_topology: TopologySnapshot,
    pub outcomes: Vec<NwbOutcome>,
    pub event_trace: Option<Vec<TraceEntry>>,
    pub position_trace: Option<Vec<(SimTime, Vec<Position>)>>,
    /// Hello-built tables at the end of the run, stale entries expired.
    pub neighbor_tables: Vec<NeighborTable>,
}

/// Runs `nwb_count` NWBs over a random deployment of `scenario`.
pub fn run_scenario(scenario: &Scenario, nwb_count: usize) -> Result<ScenarioRun, SimError> {
    Simulation::new(scenario.clone())?.run(nwb_count)
}

/// Configured, not yet started simulation.
pub struct Simulation {
    scenario: Scenario,
    positions: Option<Vec<Position>>,
    record_events: bool,
    record_positions: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        Ok(Self {
            scenario,
            positions: None,
            record_events: false,
            record_positions: false,
        })
    }

    /// Uses the given initial positions instead of a random placement.
    pub fn with_positions(mut self, positions: Vec<Position>) -> Result<Self, SimError> {
        if positions.len() != self.scenario.node_count {
            return Err(SimError::PositionCount {
                expected: self.scenario.node_count,
                got: positions.len(),
            });
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn record_events(mut self, on: bool) -> Self {
        self.record_events = on;
        self
    }

    /// Samples all positions every `mobility.position_update_period`.
    pub fn record_positions(mut self, on: bool) -> Self {
        self.record_positions = on;
        self
    }

    pub fn run(self, nwb_count: usize) -> Result<ScenarioRun, SimError> {
        let sc = &self.scenario;
        let seed = sc.seed;
        let initial_topology = match self.positions {
            Some(p) => TopologySnapshot::from_positions(p, sc.radio_range),
            None => topology::place_nodes(sc, &RngStream::new(seed, StreamName::Placement))?,
        };
        let n = sc.node_count;
        let horizon = sc.warmup + nwb_count as f64 * sc.nwb_spacing;
        let mobility_stream = RngStream::new(seed, StreamName::Mobility);
        let motion = Motion::random_waypoint(
            initial_topology.positions().to_vec(),
            &sc.mobility,
            sc.area_width,
            sc.area_height,
            horizon,
            &mobility_stream,
        );

        let mut origins: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
        origins.shuffle(&mut RngStream::new(seed, StreamName::Traffic).fork(&[]));

        let mut sched: Scheduler<Event> = Scheduler::new();
        let use_hellos = sc.protocol.needs_neighbor_tables();
        if use_hellos {
            for i in 0..n as u64 {
                let phase = mobility_stream.uniform(&[PHASE_KEY, i]) * sc.mobility.hello_period;
                sched
                    .schedule(phase, Event::HelloTick { node: NodeId(i as u32), round: 0 })
                    .expect("phase is non-negative");
            }
        }
        for k in 0..nwb_count {
            sched
                .schedule(
                    sc.warmup + k as f64 * sc.nwb_spacing,
                    Event::NwbOriginate {
                        nwb: k as u32,
                        origin: origins[k % n],
                    },
                )
                .expect("origination times are non-negative");
        }
        if self.record_positions && sc.mobility.position_update_period > 0.0 {
            sched.schedule(0.0, Event::MobilityUpdate).expect("t=0");
        }

        let static_topology = motion.is_static().then(|| initial_topology.clone());
        let mut world = World {
            scenario: sc.clone(),
            motion,
            static_topology,
            cached: None,
            tables: (0..n as u32).map(|i| NeighborTable::new(NodeId(i))).collect(),
            loss: RngStream::new(seed, StreamName::Loss),
            delay: RngStream::new(seed, StreamName::ProtocolDelay),
            sr: RngStream::new(seed, StreamName::Sr),
            active: None,
            hello_tx: 0,
            outcomes: Vec::with_capacity(nwb_count),
            event_trace: self.record_events.then(Vec::new),
            position_trace: self.record_positions.then(Vec::new),
        };
        sched.run_until(horizon, |s, ev| world.dispatch(s, ev));
        world.finish_active();
        let expiry = sc.mobility.expiry();
        for t in &mut world.tables {
            t.expire(horizon, expiry);
        }

        Ok(ScenarioRun {
            neighbor_tables: world.tables,
            initial_topology,
            outcomes: world.outcomes,
            event_trace: world.event_trace,
            position_trace: world.position_trace,
        })
    }
}

struct ActiveNwb {
    index: u32,
    id: NwbId,
    states: Vec<ProtocolState>,
    rngs: Vec<Option<ChaCha8Rng>>,
    pending: usize,
    transmissions: u32,
    sr_transmissions: u32,
    hello_at_start: u64,
    connected: bool,
}

struct World {
    scenario: Scenario,
    motion: Motion,
    static_topology: Option<TopologySnapshot>,
    cached: Option<(SimTime, TopologySnapshot)>,
    tables: Vec<NeighborTable>,
    loss: RngStream,
    delay: RngStream,
    sr: RngStream,
    active: Option<ActiveNwb>,
    hello_tx: u64,
    outcomes: Vec<NwbOutcome>,
    event_trace: Option<Vec<TraceEntry>>,
    position_trace: Option<Vec<(SimTime, Vec<Position>)>>,
}

impl World {
    fn topology_at(&mut self, t: SimTime) -> &TopologySnapshot {
        if let Some(topo) = &self.static_topology {
            return topo;
        }
        let stale = !matches!(&self.cached, Some((ct, _)) if *ct == t);
        if stale {
            let topo = TopologySnapshot::from_positions(self.motion.positions_at(t), self.scenario.radio_range);
            self.cached = Some((t, topo));
        }
        &self.cached.as_ref().expect("just cached").1
    }

    fn schedule_nwb(&mut self, sched: &mut Scheduler<Event>, time: SimTime, ev: Event) -> TimerHandle {
        if let Some(a) = self.active.as_mut() {
            a.pending += 1;
        }
        sched.schedule(time, ev).expect("events are never scheduled in the past")
    }

    fn cancel_nwb(&mut self, sched: &mut Scheduler<Event>, handle: TimerHandle) {
        if sched.cancel(handle) {
            if let Some(a) = self.active.as_mut() {
                a.pending -= 1;
            }
        }
    }

    fn dispatch(&mut self, sched: &mut Scheduler<Event>, ev: Dispatched<Event>) {
        if let Some(trace) = self.event_trace.as_mut() {
            trace.push(TraceEntry {
                time: ev.time,
                seq: ev.seq,
                kind: ev.payload.kind(),
                node: ev.payload.node(),
            });
        }
        let now = ev.time;
        if let Some(nwb) = ev.payload.nwb() {
            match self.active.as_mut() {
                Some(a) if a.index == nwb => a.pending -= 1,
                // leftover of a flagged NWB
                _ => return,
            }
        }
        match ev.payload {
            Event::NwbOriginate { nwb, origin } => self.originate(sched, now, nwb, origin),
            Event::TransmitStart { node, copy, .. } => self.transmit(sched, now, node, copy),
            Event::Receive { node, packet: Packet::Nwb { packet, .. } } => self.receive(sched, now, node, &packet),
            Event::Receive { node, packet: Packet::Hello(hello) } => {
                self.tables[node.index()].on_hello(&hello, now);
            }
            Event::TimerFire { node, timer, .. } => self.timer(sched, now, node, timer),
            Event::HelloTick { node, round } => self.hello(sched, now, node, round),
            Event::MobilityUpdate => {
                let positions = self.motion.positions_at(now);
                if let Some(trace) = self.position_trace.as_mut() {
                    trace.push((now, positions));
                }
                let period = self.scenario.mobility.position_update_period;
                sched.schedule(now + period, Event::MobilityUpdate).expect("future");
            }
        }
    }

    fn finish_active(&mut self) {
        let Some(a) = self.active.take() else { return };
        let covered_nodes: Vec<NodeId> = a
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.received)
            .map(|(i, _)| NodeId(i as u32))
            .collect();
        self.outcomes.push(NwbOutcome {
            trace: NwbTrace {
                nwb_index: a.index,
                origin: a.id.origin.0,
                covered: covered_nodes.len() as u32,
                transmissions: a.transmissions,
                hello_tx: self.hello_tx - a.hello_at_start,
                quiescent: a.pending == 0,
                connected: a.connected,
            },
            covered_nodes,
            tx_per_node: a.states.iter().map(ProtocolState::transmissions).collect(),
            sr_transmissions: a.sr_transmissions,
        });
    }

    fn context<'a>(&'a mut self, node: NodeId, now: SimTime) -> NodeContext<'a> {
        let expiry = self.scenario.mobility.expiry();
        let table = &mut self.tables[node.index()];
        table.expire(now, expiry);
        NodeContext {
            node,
            position: self.motion.position_at(node, now),
            table,
            params: &self.scenario.params,
            radio_range: self.scenario.radio_range,
        }
    }

    /// Takes the node's protocol RNG for this NWB; callers put it back.
    fn take_rng(active: &mut ActiveNwb, delay: &RngStream, node: NodeId) -> ChaCha8Rng {
        active.rngs[node.index()]
            .take()
            .unwrap_or_else(|| delay.fork(&[u64::from(active.index), u64::from(node.0)]))
    }

    fn originate(&mut self, sched: &mut Scheduler<Event>, now: SimTime, nwb: u32, origin: NodeId) {
        self.finish_active();
        let n = self.scenario.node_count;
        let connected = self.topology_at(now).is_connected().unwrap_or(false);
        let mut states = vec![ProtocolState::default(); n];
        states[origin.index()] = ProtocolState::origin(now);
        self.active = Some(ActiveNwb {
            index: nwb,
            id: NwbId { origin, seq: nwb },
            states,
            rngs: vec![None; n],
            pending: 0,
            transmissions: 0,
            sr_transmissions: 0,
            hello_at_start: self.hello_tx,
            connected,
        });
        let kind = self.scenario.protocol;
        let decision = {
            let ctx = self.context(origin, now);
            protocols::originate_nwb(kind, &ctx)
        };
        self.apply_decision(sched, now, nwb, origin, decision);
    }

    fn apply_decision(&mut self, sched: &mut Scheduler<Event>, now: SimTime, nwb: u32, node: NodeId, d: PolicyDecision) {
        let Action::TransmitAt(delay) = d.action else { return };
        let a = self.active.as_mut().expect("active NWB");
        let st = &mut a.states[node.index()];
        if st.has_committed() {
            return;
        }
        st.tx_scheduled = true;
        st.forwarders = d.forwarders;
        self.schedule_nwb(sched, now + delay, Event::TransmitStart { nwb, node, copy: Copy::Base });
    }

    fn transmit(&mut self, sched: &mut Scheduler<Event>, now: SimTime, node: NodeId, copy: Copy) {
        let lba = self.scenario.protocol == ProtocolKind::Lba;
        let position = self.motion.position_at(node, now);
        let (nwb, packet) = {
            let a = self.active.as_mut().expect("active NWB");
            let st = &mut a.states[node.index()];
            match copy {
                Copy::Base => {
                    if st.transmitted {
                        return;
                    }
                    st.tx_scheduled = false;
                    st.transmitted = true;
                }
                Copy::Sr => {
                    if st.sr_transmitted {
                        return;
                    }
                    st.sr_transmitted = true;
                    a.sr_transmissions += 1;
                }
            }
            a.transmissions += 1;
            let st = &a.states[node.index()];
            let packet = NwbPacket {
                nwb_id: a.id,
                sender: node,
                sender_position: lba.then_some(position),
                forwarder_set: st.forwarders.clone(),
                hop_count: st.hop_count,
            };
            (a.index, Rc::new(packet))
        };
        self.broadcast_nwb(sched, now, nwb, node, copy, packet);

        if copy == Copy::Base {
            let cfg = self.scenario.sr;
            let mut rng = self.sr.fork(&[u64::from(nwb), u64::from(node.0)]);
            let a = self.active.as_ref().expect("active NWB");
            if let Some(timer) = sr::sr_after_transmit(&a.states[node.index()], &cfg, &mut rng) {
                let h = self.schedule_nwb(
                    sched,
                    now + timer.delay,
                    Event::TimerFire { nwb, node, timer: TimerKind::Sr },
                );
                self.active.as_mut().expect("active NWB").states[node.index()].sr_timer = Some(h);
            }
        }
    }

    fn broadcast_nwb(
        &mut self,
        sched: &mut Scheduler<Event>,
        now: SimTime,
        nwb: u32,
        sender: NodeId,
        copy: Copy,
        packet: Rc<NwbPacket>,
    ) {
        let copy_key = match copy {
            Copy::Base => 0,
            Copy::Sr => 1,
        };
        let loss = self.scenario.loss;
        let loss_stream = self.loss.clone();
        let receivers: Vec<NodeId> = {
            let topo = self.topology_at(now);
            topo.neighbors(sender)
                .unwrap_or(&[])
                .iter()
                .copied()
                .filter(|&r| {
                    radio::delivered(
                        sender,
                        r,
                        topo,
                        &loss,
                        PacketClass::Nwb,
                        &loss_stream,
                        &[u64::from(nwb), u64::from(sender.0), copy_key, u64::from(r.0)],
                    )
                })
                .collect()
        };
        for r in receivers {
            self.schedule_nwb(
                sched,
                now + PROPAGATION_DELAY,
                Event::Receive {
                    node: r,
                    packet: Packet::Nwb { nwb, packet: Rc::clone(&packet) },
                },
            );
        }
    }

    fn receive(&mut self, sched: &mut Scheduler<Event>, now: SimTime, node: NodeId, pkt: &NwbPacket) {
        let kind = self.scenario.protocol;
        let cfg = self.scenario.sr;
        let nwb = pkt.nwb_id.seq;
        let expiry = self.scenario.mobility.expiry();
        self.tables[node.index()].expire(now, expiry);
        let position = self.motion.position_at(node, now);
        let ctx = NodeContext {
            node,
            position,
            table: &self.tables[node.index()],
            params: &self.scenario.params,
            radio_range: self.scenario.radio_range,
        };
        let a = self.active.as_mut().expect("active NWB");
        let first = a.states[node.index()].record_reception(pkt, now);
        let cancel_sr = sr::sr_on_duplicate(&a.states[node.index()], &cfg)
            .then(|| a.states[node.index()].sr_timer.take())
            .flatten();
        let mut rng = Self::take_rng(a, &self.delay, node);
        let reaction = protocols::on_receive(kind, &mut a.states[node.index()], pkt, first, &ctx, &mut rng);
        a.rngs[node.index()] = Some(rng);

        if let Some(h) = cancel_sr {
            self.cancel_nwb(sched, h);
        }
        match reaction {
            Reaction::Decide(d) => self.apply_decision(sched, now, nwb, node, d),
            Reaction::ScheduleAssessment(delay) => {
                let h = self.schedule_nwb(sched, now + delay, Event::TimerFire { nwb, node, timer: TimerKind::Assess });
                self.active.as_mut().expect("active NWB").states[node.index()].pending_timer = Some(h);
            }
            Reaction::CancelAssessment => {
                let h = self.active.as_mut().expect("active NWB").states[node.index()].pending_timer.take();
                if let Some(h) = h {
                    self.cancel_nwb(sched, h);
                }
            }
            Reaction::Nothing => {}
        }
    }

    fn timer(&mut self, sched: &mut Scheduler<Event>, now: SimTime, node: NodeId, timer: TimerKind) {
        let kind = self.scenario.protocol;
        let cfg = self.scenario.sr;
        let nwb = self.active.as_ref().expect("active NWB").index;
        match timer {
            TimerKind::Assess => {
                let expiry = self.scenario.mobility.expiry();
                self.tables[node.index()].expire(now, expiry);
                let ctx = NodeContext {
                    node,
                    position: self.motion.position_at(node, now),
                    table: &self.tables[node.index()],
                    params: &self.scenario.params,
                    radio_range: self.scenario.radio_range,
                };
                let a = self.active.as_mut().expect("active NWB");
                let mut rng = Self::take_rng(a, &self.delay, node);
                let d = protocols::on_assessment(kind, &mut a.states[node.index()], &ctx, &mut rng);
                a.rngs[node.index()] = Some(rng);
                self.apply_decision(sched, now, nwb, node, d);
            }
            TimerKind::Sr => {
                let a = self.active.as_mut().expect("active NWB");
                let d = sr::sr_fire(&mut a.states[node.index()], &cfg);
                if let Action::TransmitAt(delay) = d.action {
                    self.schedule_nwb(sched, now + delay, Event::TransmitStart { nwb, node, copy: Copy::Sr });
                }
            }
        }
    }

    fn hello(&mut self, sched: &mut Scheduler<Event>, now: SimTime, node: NodeId, round: u64) {
        let expiry = self.scenario.mobility.expiry();
        let table = &mut self.tables[node.index()];
        table.expire(now, expiry);
        let hello = Rc::new(table.emit_hello());
        self.hello_tx += 1;
        let loss = self.scenario.loss;
        let loss_stream = self.loss.clone();
        let receivers: Vec<NodeId> = {
            let topo = self.topology_at(now);
            topo.neighbors(node)
                .unwrap_or(&[])
                .iter()
                .copied()
                .filter(|&r| {
                    radio::delivered(
                        node,
                        r,
                        topo,
                        &loss,
                        PacketClass::Hello,
                        &loss_stream,
                        &[HELLO_KEY, u64::from(node.0), round, u64::from(r.0)],
                    )
                })
                .collect()
        };
        for r in receivers {
            sched
                .schedule(
                    now + PROPAGATION_DELAY,
                    Event::Receive { node: r, packet: Packet::Hello(Rc::clone(&hello)) },
                )
                .expect("future");
        }
        sched
            .schedule(
                now + self.scenario.mobility.hello_period,
                Event::HelloTick { node, round: round + 1 },
            )
            .expect("future");
    }
}
