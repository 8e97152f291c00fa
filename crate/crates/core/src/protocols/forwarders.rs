use std::collections::BTreeSet;

use crate::mobility::NeighborTable;
use crate::topology::NodeId;

/// Greedy 2-hop set cover.
///
/// Repeatedly picks the 1-hop neighbor that covers the most still-uncovered
/// 2-hop neighbors (lowest id on ties) until every 2-hop neighbor outside
/// `already_covered` is covered or no candidate adds anything.
pub fn ahbp_select_forwarders(
    node: NodeId,
    table: &NeighborTable,
    already_covered: &BTreeSet<NodeId>,
) -> BTreeSet<NodeId> {
    let mut targets: BTreeSet<NodeId> = table
        .strict_two_hop()
        .into_iter()
        .filter(|n| *n != node && !already_covered.contains(n))
        .collect();
    let candidates = table.one_hop();
    let mut chosen = BTreeSet::new();
    while !targets.is_empty() {
        let best = candidates
            .iter()
            .filter(|c| !chosen.contains(*c))
            .map(|&c| {
                let gain = table
                    .neighbors_of(c)
                    .map_or(0, |l| l.iter().filter(|t| targets.contains(*t)).count());
                (gain, c)
            })
            // max gain, then lowest id
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        match best {
            Some((gain, c)) if gain > 0 => {
                if let Some(l) = table.neighbors_of(c) {
                    for t in l {
                        targets.remove(t);
                    }
                }
                chosen.insert(c);
            }
            _ => break,
        }
    }
    chosen
}

/// Transmitters among `{node} ∪ known neighbors` that could cover neighbor `v`.
pub fn potential_coverers(node: NodeId, table: &NeighborTable, v: NodeId) -> usize {
    1 + table
        .one_hop()
        .into_iter()
        .filter(|&u| u != v && u != node && table.believes_adjacent(u, v))
        .count()
}

/// Double-coverage forwarder selection.
///
/// Starts from the AHBP cover of the 2-hop neighborhood and then greedily adds
/// 1-hop neighbors until every 1-hop neighbor hears at least two transmitters
/// among `{node} ∪ forwarders`. A forwarder does not count as covering itself.
/// Neighbors with only one possible coverer stay single-covered.
pub fn dcb_select_forwarders(
    node: NodeId,
    table: &NeighborTable,
    already_covered: &BTreeSet<NodeId>,
) -> BTreeSet<NodeId> {
    let mut chosen = ahbp_select_forwarders(node, table, already_covered);
    let one_hop: Vec<NodeId> = table.one_hop().into_iter().collect();

    let count = |v: NodeId, chosen: &BTreeSet<NodeId>| {
        1 + chosen
            .iter()
            .filter(|&&f| f != v && table.believes_adjacent(f, v))
            .count()
    };
    let mut need: Vec<(NodeId, usize)> = one_hop
        .iter()
        .map(|&v| {
            let want = potential_coverers(node, table, v).min(2);
            (v, want.saturating_sub(count(v, &chosen)))
        })
        .collect();

    loop {
        if need.iter().all(|(_, n)| *n == 0) {
            break;
        }
        let best = one_hop
            .iter()
            .filter(|c| !chosen.contains(*c))
            .map(|&c| {
                let gain = need
                    .iter()
                    .filter(|(v, n)| *n > 0 && *v != c && table.believes_adjacent(c, *v))
                    .count();
                (gain, c)
            })
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        match best {
            Some((gain, c)) if gain > 0 => {
                chosen.insert(c);
                for (v, n) in need.iter_mut() {
                    if *n > 0 && *v != c && table.believes_adjacent(c, *v) {
                        *n -= 1;
                    }
                }
            }
            _ => break,
        }
    }
    chosen
}
