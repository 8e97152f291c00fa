use std::collections::BTreeSet;

use nwbsim::engine::{RngStream, StreamName};
use nwbsim::mobility::NeighborTable;
use nwbsim::protocols::{ahbp_select_forwarders, dcb_select_forwarders, uncovered_fraction_mc};
use nwbsim::topology::uniform_positions;
use nwbsim::{NodeId, Position, TopologySnapshot};

/// Fraction of the own disk outside every sender disk, by midpoint-rule
/// integration over a fine grid.
fn uncovered_fraction_grid(own: Position, senders: &[Position], r: f64, cells: usize) -> f64 {
    let h = 2.0 * r / cells as f64;
    let (mut inside, mut uncovered) = (0u64, 0u64);
    for i in 0..cells {
        for j in 0..cells {
            let p = Position::new(own.x - r + (i as f64 + 0.5) * h, own.y - r + (j as f64 + 0.5) * h);
            if p.distance(&own) > r {
                continue;
            }
            inside += 1;
            if senders.iter().all(|s| p.distance(s) > r) {
                uncovered += 1;
            }
        }
    }
    uncovered as f64 / inside as f64
}

#[test]
fn lba_estimate_matches_grid_integration() {
    let own = Position::new(500.0, 500.0);
    let r = 250.0;
    let layouts: [[(f64, f64); 3]; 4] = [
        [(200.0, 0.0), (-100.0, 173.0), (-100.0, -173.0)],
        [(250.0, 0.0), (-125.0, 216.5), (-125.0, -216.5)],
        [(120.0, 40.0), (-60.0, 200.0), (-30.0, -240.0)],
        [(240.0, 10.0), (0.0, 230.0), (-180.0, -150.0)],
    ];
    for (k, layout) in layouts.iter().enumerate() {
        let senders: Vec<Position> = layout.iter().map(|(dx, dy)| Position::new(own.x + dx, own.y + dy)).collect();
        let oracle = uncovered_fraction_grid(own, &senders, r, 2000);
        let mut rng = RngStream::new(k as u64, StreamName::ProtocolDelay).fork(&[]);
        let est = uncovered_fraction_mc(own, &senders, r, 2000, &mut rng);
        assert!((est - oracle).abs() < 0.02, "layout {k}: mc {est} vs grid {oracle}");
    }
}

fn neighborhood(seed: u64) -> TopologySnapshot {
    let mut rng = RngStream::new(seed, StreamName::Placement).fork(&[1]);
    let n = 3 + (seed % 10) as usize;
    // small area so the selector has a rich 2-hop neighborhood
    TopologySnapshot::from_positions(uniform_positions(600.0, 600.0, n, &mut rng), 250.0)
}

fn strict_two_hop(topo: &TopologySnapshot, node: NodeId) -> BTreeSet<NodeId> {
    let one = topo.k_hop_neighbors(node, 1).unwrap();
    topo.k_hop_neighbors(node, 2).unwrap().difference(&one).copied().collect()
}

fn covers(topo: &TopologySnapshot, set: &[NodeId], targets: &BTreeSet<NodeId>) -> bool {
    targets.iter().all(|&t| set.iter().any(|&f| topo.are_adjacent(f, t)))
}

#[test]
fn greedy_cover_is_valid_and_within_log_bound_of_optimum() {
    let mut nontrivial = 0;
    for seed in 0..1000 {
        let topo = neighborhood(seed);
        let me = NodeId(0);
        let table = NeighborTable::from_topology(me, &topo, 0.0);
        let targets = strict_two_hop(&topo, me);
        let greedy: Vec<NodeId> = ahbp_select_forwarders(me, &table, &BTreeSet::new()).into_iter().collect();
        assert!(covers(&topo, &greedy, &targets), "seed {seed}");
        if targets.is_empty() {
            assert!(greedy.is_empty());
            continue;
        }
        nontrivial += 1;
        let cands: Vec<NodeId> = topo.neighbors(me).unwrap().to_vec();
        let optimum = (0u32..1 << cands.len())
            .filter_map(|mask| {
                let set: Vec<NodeId> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
                covers(&topo, &set, &targets).then_some(set.len())
            })
            .min()
            .expect("the full neighbor set covers every 2-hop node");
        let bound = (1.0 + (targets.len() as f64).ln()) * optimum as f64;
        assert!(greedy.len() as f64 <= bound + 1e-9, "seed {seed}: {} vs opt {optimum}", greedy.len());
    }
    assert!(nontrivial > 300, "{nontrivial}");
}

#[test]
fn dcb_double_covers_wherever_possible() {
    let mut doubled = 0;
    for seed in 0..1000 {
        let topo = neighborhood(seed);
        let me = NodeId(0);
        let table = NeighborTable::from_topology(me, &topo, 0.0);
        let fwd = dcb_select_forwarders(me, &table, &BTreeSet::new());
        let ahbp = ahbp_select_forwarders(me, &table, &BTreeSet::new());
        assert!(ahbp.is_subset(&fwd));
        let one_hop = topo.neighbors(me).unwrap();
        assert!(fwd.iter().all(|f| one_hop.contains(f)));
        for &v in one_hop {
            let possible = 1 + one_hop.iter().filter(|&&u| u != v && topo.are_adjacent(u, v)).count();
            let actual = 1 + fwd.iter().filter(|&&u| u != v && topo.are_adjacent(u, v)).count();
            assert!(actual >= possible.min(2), "seed {seed}: {v} covered {actual}x of {possible}");
            doubled += usize::from(possible >= 2);
        }
    }
    assert!(doubled > 1000);
}
