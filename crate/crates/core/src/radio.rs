//! Per-receiver delivery: unit-disk range test plus the controlled-drop loss
//! model.

use crate::engine::RngStream;
use crate::topology::{NodeId, TopologySnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Perfect,
    BernoulliDrop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacketClass {
    Nwb,
    Hello,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossModelConfig {
    pub kind: LossKind,
    pub drop_probability: f64,
    pub drop_applies_to_hellos: bool,
}

impl Default for LossModelConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::BernoulliDrop,
            drop_probability: 0.0,
            drop_applies_to_hellos: true,
        }
    }
}

impl LossModelConfig {
    pub fn bernoulli(drop_probability: f64) -> Self {
        Self {
            drop_probability,
            ..Self::default()
        }
    }

    /// Drop probability seen by a packet of the given class.
    pub fn effective_drop(&self, class: PacketClass) -> f64 {
        match (self.kind, class) {
            (LossKind::Perfect, _) => 0.0,
            (LossKind::BernoulliDrop, PacketClass::Hello) if !self.drop_applies_to_hellos => 0.0,
            (LossKind::BernoulliDrop, _) => self.drop_probability,
        }
    }

    /// Whether a packet survives the loss model, given a uniform draw in `[0, 1)`.
    pub fn survives(&self, class: PacketClass, draw: f64) -> bool {
        draw >= self.effective_drop(class)
    }
}

/// Decides whether one transmission reaches one receiver.
///
/// `draw_key` addresses the loss draw for this (transmission, receiver) pair
/// in the loss stream; every pair gets its own independent draw.
pub fn delivered(
    sender: NodeId,
    receiver: NodeId,
    topo: &TopologySnapshot,
    loss: &LossModelConfig,
    class: PacketClass,
    stream: &RngStream,
    draw_key: &[u64],
) -> bool {
    if sender == receiver || !topo.are_adjacent(sender, receiver) {
        return false;
    }
    loss.survives(class, stream.uniform(draw_key))
}
