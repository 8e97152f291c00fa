use std::collections::{BTreeSet, VecDeque};

use nwbsim::engine::{RngStream, StreamName};
use nwbsim::topology::{place_nodes, uniform_positions};
use nwbsim::{NodeId, Position, Scenario, TopologySnapshot};
use proptest::prelude::*;

/// Hop distances from `src` by BFS over a brute-force distance matrix.
fn bfs_hops(pos: &[Position], range: f64, src: usize) -> Vec<Option<usize>> {
    let n = pos.len();
    let mut dist = vec![None; n];
    dist[src] = Some(0);
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        for v in 0..n {
            if v != u && dist[v].is_none() && pos[u].distance(&pos[v]) <= range {
                dist[v] = Some(dist[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let root = self.find(self.0[x]);
            self.0[x] = root;
        }
        self.0[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

fn random_topology(seed: u64, n: usize, side: f64, range: f64) -> TopologySnapshot {
    let mut rng = RngStream::new(seed, StreamName::Placement).fork(&[]);
    TopologySnapshot::from_positions(uniform_positions(side, side, n, &mut rng), range)
}

#[test]
fn k_hop_sets_match_bfs_distances() {
    for seed in 0..200 {
        let topo = random_topology(seed, 25, 1000.0, 250.0);
        for src in 0..topo.node_count() {
            let dist = bfs_hops(topo.positions(), 250.0, src);
            for k in 1..=3 {
                let expected: BTreeSet<NodeId> = dist
                    .iter()
                    .enumerate()
                    .filter(|(i, d)| *i != src && matches!(d, Some(h) if *h <= k))
                    .map(|(i, _)| NodeId(i as u32))
                    .collect();
                assert_eq!(topo.k_hop_neighbors(NodeId(src as u32), k).unwrap(), expected, "seed {seed} src {src} k {k}");
            }
        }
    }
}

#[test]
fn connectivity_matches_union_find() {
    let mut connected = 0;
    for seed in 0..1000 {
        let n = 2 + (seed % 29) as usize;
        let topo = random_topology(seed, n, 1000.0, 250.0);
        let pos = topo.positions();
        let mut uf = UnionFind((0..n).collect());
        for a in 0..n {
            for b in a + 1..n {
                if pos[a].distance(&pos[b]) <= 250.0 {
                    uf.union(a, b);
                }
            }
        }
        let root = uf.find(0);
        let expected = (0..n).all(|i| uf.find(i) == root);
        assert_eq!(topo.is_connected().unwrap(), expected, "seed {seed}");
        connected += usize::from(expected);
        let comp: BTreeSet<NodeId> = (0..n).filter(|&i| uf.find(i) == root).map(|i| NodeId(i as u32)).collect();
        assert_eq!(topo.component_of(NodeId(0)).unwrap(), comp);
    }
    // both outcomes exercised
    assert!(connected > 50 && connected < 950, "{connected}");
}

#[test]
fn connected_placement_is_connected_and_reproducible() {
    let s = Scenario {
        node_count: 30,
        require_connected: true,
        ..Scenario::default()
    };
    for seed in 0..20 {
        let s = Scenario { seed, ..s.clone() };
        let stream = RngStream::new(seed, StreamName::Placement);
        let a = place_nodes(&s, &stream).unwrap();
        assert!(a.is_connected().unwrap());
        let b = place_nodes(&s, &stream).unwrap();
        assert_eq!(a.positions(), b.positions());
    }
}

fn arb_positions() -> impl Strategy<Value = Vec<Position>> {
    prop::collection::vec((0.0..1000.0f64, 0.0..1000.0f64), 1..40)
        .prop_map(|v| v.into_iter().map(|(x, y)| Position::new(x, y)).collect())
}

proptest! {
    #[test]
    fn adjacency_is_symmetric_and_irreflexive(pos in arb_positions(), range in 1.0..600.0f64) {
        let topo = TopologySnapshot::from_positions(pos, range);
        for a in topo.nodes() {
            prop_assert!(!topo.are_adjacent(a, a));
            for &b in topo.neighbors(a).unwrap() {
                prop_assert!(topo.are_adjacent(b, a));
                prop_assert!(topo.neighbors(b).unwrap().contains(&a));
            }
        }
    }

    #[test]
    fn hop_sets_are_nested(pos in arb_positions(), range in 1.0..600.0f64) {
        let topo = TopologySnapshot::from_positions(pos, range);
        for a in topo.nodes() {
            let one = topo.k_hop_neighbors(a, 1).unwrap();
            let two = topo.k_hop_neighbors(a, 2).unwrap();
            prop_assert!(one.is_subset(&two));
            prop_assert!(two.is_subset(&topo.component_of(a).unwrap()));
        }
    }

    #[test]
    fn uniform_placement_stays_in_area(seed in any::<u64>(), n in 1usize..60, w in 1.0..2000.0f64, h in 1.0..2000.0f64) {
        let mut rng = RngStream::new(seed, StreamName::Placement).fork(&[]);
        for p in uniform_positions(w, h, n, &mut rng) {
            prop_assert!((0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y));
        }
    }
}
