use std::f64::consts::PI;

use rand::Rng;

use super::{NodeContext, PolicyDecision, ProtocolState};
use crate::topology::Position;

/// Monte Carlo estimate of the fraction of the disk around `own` (radius
/// `range`) that lies outside every disk around `senders`.
pub fn uncovered_fraction_mc<R: Rng + ?Sized>(
    own: Position,
    senders: &[Position],
    range: f64,
    samples: usize,
    rng: &mut R,
) -> f64 {
    if senders.is_empty() {
        return 1.0;
    }
    if samples == 0 {
        return 0.0;
    }
    let r2 = range * range;
    let uncovered = (0..samples)
        .filter(|_| {
            // uniform in the disk
            let rad = range * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            let px = own.x + rad * theta.cos();
            let py = own.y + rad * theta.sin();
            senders.iter().all(|s| {
                let dx = px - s.x;
                let dy = py - s.y;
                dx * dx + dy * dy > r2
            })
        })
        .count();
    uncovered as f64 / samples as f64
}

/// Location-based assessment: rebroadcast iff the part of the own disk not
/// covered by overheard senders exceeds the threshold fraction.
pub fn lba_on_timer<R: Rng + ?Sized>(
    state: &ProtocolState,
    ctx: &NodeContext<'_>,
    rng: &mut R,
) -> PolicyDecision {
    let senders: Vec<Position> = state.heard_senders.iter().map(|(_, p)| *p).collect();
    let frac = uncovered_fraction_mc(
        ctx.position,
        &senders,
        ctx.radio_range,
        ctx.params.lba_mc_samples,
        rng,
    );
    if frac > ctx.params.lba_threshold_fraction {
        PolicyDecision::transmit_at(0.0)
    } else {
        PolicyDecision::no_transmit()
    }
}
