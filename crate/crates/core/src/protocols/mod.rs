//! NWB forwarding policies behind one interface.
//!
//! The simulation records every reception in a [`ProtocolState`] and then asks
//! the configured policy how to react. Policies never touch the scheduler
//! directly; they return a [`Reaction`] or [`PolicyDecision`] and the caller
//! turns it into events.

mod forwarders;
mod lba;
mod sba;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::{SimTime, TimerHandle};
use crate::mobility::NeighborTable;
use crate::topology::{NodeId, Position};

pub use forwarders::{ahbp_select_forwarders, dcb_select_forwarders, potential_coverers};
pub use lba::{lba_on_timer, uncovered_fraction_mc};
pub use sba::{sba_assessment_delay, sba_on_receive, sba_uncovered};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtocolKind {
    Flooding,
    Lba,
    Sba,
    Ahbp,
    Dcb,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Flooding,
        ProtocolKind::Lba,
        ProtocolKind::Sba,
        ProtocolKind::Ahbp,
        ProtocolKind::Dcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Flooding => "flooding",
            ProtocolKind::Lba => "lba",
            ProtocolKind::Sba => "sba",
            ProtocolKind::Ahbp => "ahbp",
            ProtocolKind::Dcb => "dcb",
        }
    }

    /// Whether the policy consults hello-built neighbor tables.
    pub fn needs_neighbor_tables(self) -> bool {
        matches!(self, ProtocolKind::Sba | ProtocolKind::Ahbp | ProtocolKind::Dcb)
    }

    /// Whether forwarding responsibility is assigned by the upstream node.
    pub fn is_static(self) -> bool {
        matches!(self, ProtocolKind::Ahbp | ProtocolKind::Dcb)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown protocol `{s}` (expected flooding, lba, sba, ahbp or dcb)"))
    }
}

/// Timing and threshold knobs shared by the policies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    /// Upper bound of the uniform jitter applied to immediate rebroadcasts.
    pub jitter_max: f64,
    /// Upper bound of the random assessment delay used by LBA and SBA.
    pub rad_max: f64,
    /// LBA rebroadcasts iff the estimated uncovered part of its disk exceeds
    /// this fraction of the disk area.
    pub lba_threshold_fraction: f64,
    pub lba_mc_samples: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            jitter_max: 0.010,
            rad_max: 0.050,
            lba_threshold_fraction: 0.10,
            lba_mc_samples: 2000,
        }
    }
}

/// `(origin, sequence number)`; stable across all rebroadcasts of one NWB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NwbId {
    pub origin: NodeId,
    pub seq: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NwbPacket {
    pub nwb_id: NwbId,
    pub sender: NodeId,
    /// Sender location, attached by LBA only.
    pub sender_position: Option<Position>,
    /// Designated forwarders, attached by AHBP and DCB only.
    pub forwarder_set: Option<Vec<NodeId>>,
    pub hop_count: u32,
}

impl NwbPacket {
    pub fn designates(&self, node: NodeId) -> bool {
        self.forwarder_set
            .as_ref()
            .is_some_and(|f| f.binary_search(&node).is_ok())
    }
}

/// Per-node bookkeeping for the NWB in progress.
#[derive(Clone, Debug, Default)]
pub struct ProtocolState {
    pub is_origin: bool,
    pub received: bool,
    pub first_rx_time: Option<SimTime>,
    pub hop_count: u32,
    /// Receptions of this NWB from other nodes, duplicates included.
    pub heard_count: u32,
    /// Locations carried by overheard rebroadcasts (LBA).
    pub heard_senders: Vec<(NodeId, Position)>,
    /// Nodes believed covered by overheard transmissions (SBA).
    pub covered: BTreeSet<NodeId>,
    /// Pending LBA/SBA assessment timer.
    pub pending_timer: Option<TimerHandle>,
    /// The assessment ran (or was cancelled); no second one is scheduled.
    pub assessed: bool,
    pub tx_scheduled: bool,
    pub transmitted: bool,
    pub designated_forwarder: bool,
    /// Forwarder list attached to this node's transmissions, reused by SR.
    pub forwarders: Option<Vec<NodeId>>,
    pub sr_timer: Option<TimerHandle>,
    pub sr_transmitted: bool,
}

impl ProtocolState {
    pub fn origin(now: SimTime) -> Self {
        Self {
            is_origin: true,
            received: true,
            first_rx_time: Some(now),
            ..Self::default()
        }
    }

    /// Books one reception; returns true if it was the first.
    pub fn record_reception(&mut self, pkt: &NwbPacket, now: SimTime) -> bool {
        self.heard_count += 1;
        if let Some(pos) = pkt.sender_position {
            self.heard_senders.push((pkt.sender, pos));
        }
        if self.received {
            return false;
        }
        self.received = true;
        self.first_rx_time = Some(now);
        self.hop_count = pkt.hop_count + 1;
        true
    }

    /// Base transmission done or already queued.
    pub fn has_committed(&self) -> bool {
        self.tx_scheduled || self.transmitted
    }

    pub fn transmissions(&self) -> u32 {
        u32::from(self.transmitted) + u32::from(self.sr_transmitted)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Action {
    NoTransmit,
    TransmitAt(SimTime),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyDecision {
    pub action: Action,
    pub forwarders: Option<Vec<NodeId>>,
}

impl PolicyDecision {
    pub fn no_transmit() -> Self {
        Self {
            action: Action::NoTransmit,
            forwarders: None,
        }
    }

    pub fn transmit_at(delay: SimTime) -> Self {
        Self {
            action: Action::TransmitAt(delay),
            forwarders: None,
        }
    }

    pub fn with_forwarders(mut self, set: BTreeSet<NodeId>) -> Self {
        self.forwarders = Some(set.into_iter().collect());
        self
    }

    pub fn transmits(&self) -> bool {
        matches!(self.action, Action::TransmitAt(_))
    }
}

/// What a node does in response to a reception.
#[derive(Clone, Debug, PartialEq)]
pub enum Reaction {
    Decide(PolicyDecision),
    ScheduleAssessment(SimTime),
    CancelAssessment,
    Nothing,
}

/// What a node knows locally when a policy runs.
#[derive(Clone, Copy, Debug)]
pub struct NodeContext<'a> {
    pub node: NodeId,
    pub position: Position,
    pub table: &'a NeighborTable,
    pub params: &'a ProtocolParams,
    pub radio_range: f64,
}

fn jitter<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> SimTime {
    if params.jitter_max > 0.0 {
        rng.gen_range(0.0..=params.jitter_max)
    } else {
        0.0
    }
}

/// Flooding: the first reception schedules one jittered rebroadcast.
pub fn flooding_on_receive<R: Rng + ?Sized>(
    state: &ProtocolState,
    params: &ProtocolParams,
    rng: &mut R,
) -> PolicyDecision {
    if state.has_committed() || state.is_origin {
        return PolicyDecision::no_transmit();
    }
    PolicyDecision::transmit_at(jitter(params, rng))
}

/// Upstream nodes considered covered by the transmission `pkt`: its sender and
/// the sender's neighbors as known locally.
fn covered_by_sender(ctx: &NodeContext<'_>, pkt: &NwbPacket) -> BTreeSet<NodeId> {
    let mut covered = BTreeSet::from([pkt.sender, ctx.node]);
    if let Some(list) = ctx.table.neighbors_of(pkt.sender) {
        covered.extend(list.iter().copied());
    }
    covered
}

/// AHBP: transmit iff designated by the packet and not yet committed, with a
/// freshly selected forwarder set.
pub fn ahbp_on_receive<R: Rng + ?Sized>(
    state: &mut ProtocolState,
    pkt: &NwbPacket,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> PolicyDecision {
    designated_on_receive(state, pkt, ctx, rng, ahbp_select_forwarders)
}

/// DCB: as AHBP, but forwarders are chosen under the double-coverage rule.
pub fn dcb_on_receive<R: Rng + ?Sized>(
    state: &mut ProtocolState,
    pkt: &NwbPacket,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> PolicyDecision {
    designated_on_receive(state, pkt, ctx, rng, dcb_select_forwarders)
}

fn designated_on_receive<R, F>(
    state: &mut ProtocolState,
    pkt: &NwbPacket,
    ctx: &NodeContext<'_>,
    rng: &mut R,
    select: F,
) -> PolicyDecision
where
    R: Rng + ?Sized,
    F: Fn(NodeId, &NeighborTable, &BTreeSet<NodeId>) -> BTreeSet<NodeId>,
{
    if !pkt.designates(ctx.node) {
        return PolicyDecision::no_transmit();
    }
    state.designated_forwarder = true;
    if state.has_committed() || state.is_origin {
        return PolicyDecision::no_transmit();
    }
    let covered = covered_by_sender(ctx, pkt);
    let set = select(ctx.node, ctx.table, &covered);
    PolicyDecision::transmit_at(jitter(ctx.params, rng)).with_forwarders(set)
}

/// Decision for the origin of a new NWB: always transmit immediately.
pub fn originate_nwb(kind: ProtocolKind, ctx: &NodeContext<'_>) -> PolicyDecision {
    let none = BTreeSet::new();
    let decision = PolicyDecision::transmit_at(0.0);
    match kind {
        ProtocolKind::Ahbp => decision.with_forwarders(ahbp_select_forwarders(ctx.node, ctx.table, &none)),
        ProtocolKind::Dcb => decision.with_forwarders(dcb_select_forwarders(ctx.node, ctx.table, &none)),
        _ => decision,
    }
}

/// Dispatches a reception (already booked in `state`) to the policy.
pub fn on_receive<R: Rng + ?Sized>(
    kind: ProtocolKind,
    state: &mut ProtocolState,
    pkt: &NwbPacket,
    first: bool,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> Reaction {
    if state.is_origin {
        return Reaction::Nothing;
    }
    match kind {
        ProtocolKind::Flooding => Reaction::Decide(flooding_on_receive(state, ctx.params, rng)),
        ProtocolKind::Lba => {
            if first && !state.assessed && !state.has_committed() {
                Reaction::ScheduleAssessment(rng.gen_range(0.0..=ctx.params.rad_max))
            } else {
                Reaction::Nothing
            }
        }
        ProtocolKind::Sba => sba_on_receive(state, pkt, first, ctx, rng),
        ProtocolKind::Ahbp => Reaction::Decide(ahbp_on_receive(state, pkt, ctx, rng)),
        ProtocolKind::Dcb => Reaction::Decide(dcb_on_receive(state, pkt, ctx, rng)),
    }
}

/// Runs a fired assessment timer (LBA and SBA only).
pub fn on_assessment<R: Rng + ?Sized>(
    kind: ProtocolKind,
    state: &mut ProtocolState,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> PolicyDecision {
    state.pending_timer = None;
    state.assessed = true;
    if state.has_committed() {
        return PolicyDecision::no_transmit();
    }
    match kind {
        ProtocolKind::Lba => lba_on_timer(state, ctx, rng),
        ProtocolKind::Sba => PolicyDecision::transmit_at(0.0),
        _ => PolicyDecision::no_transmit(),
    }
}
