use std::collections::BTreeSet;

use rand::Rng;

use super::{NodeContext, NwbPacket, ProtocolState, Reaction};
use crate::engine::SimTime;
use crate::topology::NodeId;

/// Own 1-hop neighbors not yet covered by overheard transmissions.
pub fn sba_uncovered(state: &ProtocolState, ctx: &NodeContext<'_>) -> BTreeSet<NodeId> {
    ctx.table
        .one_hop()
        .into_iter()
        .filter(|n| !state.covered.contains(n))
        .collect()
}

/// Random assessment delay, shorter for nodes whose degree is high relative
/// to their neighbors': uniform in `[0, rad_max * min(1, (1+d_max)/(1+d_self))]`.
pub fn sba_assessment_delay<R: Rng + ?Sized>(ctx: &NodeContext<'_>, rng: &mut R) -> SimTime {
    let own = ctx.table.one_hop_len();
    let max_neighbor = ctx
        .table
        .one_hop()
        .into_iter()
        .filter_map(|n| ctx.table.neighbors_of(n).map(BTreeSet::len))
        .max()
        .unwrap_or(0);
    let ratio = (1 + max_neighbor) as f64 / (1 + own) as f64;
    let ceiling = ctx.params.rad_max * ratio.min(1.0);
    if ceiling > 0.0 {
        rng.gen_range(0.0..=ceiling)
    } else {
        0.0
    }
}

/// Scalable Broadcast Algorithm reception handling.
///
/// Every reception marks the sender and the sender's known neighbors as
/// covered. The first reception schedules an assessment if some own neighbor
/// is still uncovered; later ones cancel a pending assessment once all own
/// neighbors are covered. A sender missing from the table contributes only
/// itself.
pub fn sba_on_receive<R: Rng + ?Sized>(
    state: &mut ProtocolState,
    pkt: &NwbPacket,
    first: bool,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> Reaction {
    state.covered.insert(pkt.sender);
    if let Some(list) = ctx.table.neighbors_of(pkt.sender) {
        state.covered.extend(list.iter().copied());
    }
    let all_covered = sba_uncovered(state, ctx).is_empty();
    if first {
        if all_covered || state.has_committed() {
            state.assessed = true;
            Reaction::Nothing
        } else {
            Reaction::ScheduleAssessment(sba_assessment_delay(ctx, rng))
        }
    } else if state.pending_timer.is_some() && all_covered {
        state.assessed = true;
        Reaction::CancelAssessment
    } else {
        Reaction::Nothing
    }
}
