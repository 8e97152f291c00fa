use nwbsim::engine::{RngStream, StreamName};
use nwbsim::mobility::{expire_neighbors, HelloPacket, MobilityConfig, Motion, NeighborTable};
use nwbsim::protocols::ProtocolKind;
use nwbsim::simulation::run_scenario;
use nwbsim::{NodeId, Position, Scenario};
use proptest::prelude::*;

fn hello_only(seed: u64, drop: f64) -> Scenario {
    Scenario {
        seed,
        protocol: ProtocolKind::Sba,
        ..Scenario::default()
    }
    .with_drop(drop)
}

#[test]
fn static_tables_converge_to_true_neighborhoods() {
    for seed in 0..100 {
        let s = hello_only(seed, 0.0);
        // warmup is 3 hello periods and no NWB is sent
        let run = run_scenario(&s, 0).unwrap();
        let topo = &run.initial_topology;
        for node in topo.nodes() {
            let table = &run.neighbor_tables[node.index()];
            assert_eq!(table.one_hop(), topo.k_hop_neighbors(node, 1).unwrap(), "seed {seed} {node}");
            assert_eq!(table.within_two_hops(), topo.k_hop_neighbors(node, 2).unwrap(), "seed {seed} {node}");
            for &n in topo.neighbors(node).unwrap() {
                let reported: Vec<NodeId> = table.neighbors_of(n).unwrap().iter().copied().collect();
                assert_eq!(reported, topo.neighbors(n).unwrap());
            }
        }
    }
}

#[test]
fn lost_hellos_leave_tables_empty() {
    let run = run_scenario(&hello_only(4, 1.0), 0).unwrap();
    assert!(run.neighbor_tables.iter().all(|t| t.one_hop_len() == 0));

    let mut s = hello_only(4, 1.0);
    s.loss.drop_applies_to_hellos = false;
    let run = run_scenario(&s, 0).unwrap();
    for node in run.initial_topology.nodes() {
        assert_eq!(
            run.neighbor_tables[node.index()].one_hop(),
            run.initial_topology.k_hop_neighbors(node, 1).unwrap()
        );
    }
}

#[test]
fn flooding_sends_no_hellos() {
    let s = Scenario { node_count: 10, ..Scenario::default() };
    let run = run_scenario(&s, 10).unwrap();
    assert!(run.outcomes.iter().all(|o| o.trace.hello_tx == 0));
    let run = run_scenario(&s.with_protocol(ProtocolKind::Dcb), 10).unwrap();
    // every node says hello once per period between originations
    assert!(run.outcomes.iter().skip(1).all(|o| (o.trace.hello_tx as i64 - 20).abs() <= 10));
}

/// Rebuilds a table keeping only entries heard at or after the cutoff.
fn rebuilt(hellos: &[(f64, HelloPacket)], owner: NodeId, now: f64, expiry: f64) -> NeighborTable {
    let mut t = NeighborTable::new(owner);
    for (at, h) in hellos {
        if *at >= now - expiry {
            t.on_hello(h, *at);
        }
    }
    t
}

proptest! {
    #[test]
    fn expiry_equals_rebuilding_from_recent_hellos(
        raw in prop::collection::vec((0.0..10.0f64, 1u32..8, prop::collection::vec(0u32..8, 0..5)), 0..30),
        now in 0.0..12.0f64,
    ) {
        let mut hellos: Vec<(f64, HelloPacket)> = raw
            .into_iter()
            .map(|(t, s, l)| (t, HelloPacket { sender: NodeId(s), neighbors: l.into_iter().map(NodeId).collect() }))
            .collect();
        hellos.sort_by(|a, b| a.0.total_cmp(&b.0));
        let owner = NodeId(0);
        let mut full = NeighborTable::new(owner);
        for (at, h) in &hellos {
            full.on_hello(h, *at);
        }
        // only the latest hello per sender matters for a rebuild
        let expired = expire_neighbors(&full, now, 2.5);
        let latest_only: Vec<(f64, HelloPacket)> = hellos
            .iter()
            .filter(|(at, h)| !hellos.iter().any(|(t2, h2)| h2.sender == h.sender && t2 > at))
            .cloned()
            .collect();
        prop_assert_eq!(expired, rebuilt(&latest_only, owner, now, 2.5));
    }

    #[test]
    fn waypoint_motion_stays_in_area(seed in any::<u64>(), speed in 0.5..40.0f64, t in 0.0..200.0f64) {
        let stream = RngStream::new(seed, StreamName::Mobility);
        let mut rng = stream.fork(&[99]);
        let initial = nwbsim::topology::uniform_positions(800.0, 500.0, 10, &mut rng);
        let motion = Motion::random_waypoint(initial, &MobilityConfig::random_waypoint(speed), 800.0, 500.0, 200.0, &stream);
        for p in motion.positions_at(t) {
            prop_assert!((0.0..=800.0).contains(&p.x) && (0.0..=500.0).contains(&p.y), "{:?}", p);
        }
    }
}

#[test]
fn waypoint_speed_matches_configured_mean() {
    let stream = RngStream::new(11, StreamName::Mobility);
    let initial = vec![Position::new(500.0, 500.0); 200];
    let motion = Motion::random_waypoint(initial, &MobilityConfig::random_waypoint(15.0), 1000.0, 1000.0, 600.0, &stream);
    // per-leg speed is uniform on [7.5, 22.5); time-weighted mean is the harmonic mean
    let (mut dist, mut time) = (0.0, 0.0);
    for i in 0..200 {
        let (d, t) = motion.travel_stats(NodeId(i), 600.0);
        dist += d;
        time += t;
    }
    let harmonic = 15.0 / (1.5f64 / 0.5).ln();
    let avg = dist / time;
    assert!((avg - harmonic).abs() / harmonic < 0.05, "{avg} vs {harmonic}");
}
