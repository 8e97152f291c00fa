//! Ready-made experiment configurations.

use crate::protocols::ProtocolKind;
use crate::scenario::Scenario;
use crate::sr::SrMode;

use super::config::SweepConfig;

pub const PRESET_NAMES: [&str; 5] = [
    "fig5_controlled_drop_30",
    "fig7_50node",
    "mobility_15mps",
    "counter_sr_30",
    "prob_sr_30",
];

pub const DROP_GRID: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

fn all_protocols(node_count: usize) -> SweepConfig {
    let base = Scenario {
        node_count,
        ..Scenario::default()
    };
    SweepConfig {
        protocols: ProtocolKind::ALL.to_vec(),
        drop_probabilities: DROP_GRID.to_vec(),
        ..SweepConfig::single(base)
    }
}

pub fn preset(name: &str) -> Option<SweepConfig> {
    Some(match name {
        "fig5_controlled_drop_30" => all_protocols(30),
        "fig7_50node" => all_protocols(50),
        "mobility_15mps" => SweepConfig {
            drop_probabilities: vec![0.0],
            speeds: vec![15.0],
            sr_modes: vec![SrMode::None, SrMode::Counter { n: 2 }],
            ..all_protocols(30)
        },
        "counter_sr_30" => SweepConfig {
            sr_modes: vec![SrMode::None, SrMode::Counter { n: 2 }],
            ..all_protocols(30)
        },
        "prob_sr_30" => SweepConfig {
            sr_modes: vec![SrMode::None, SrMode::Probabilistic { p: 0.5 }],
            ..all_protocols(30)
        },
        _ => return None,
    })
}
