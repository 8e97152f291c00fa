//! Per-NWB records and seed-level aggregation.
//!
//! Coverage counts the origin as covered and normalized overhead counts the
//! origin's own send as a transmission, so plain flooding has a normalized
//! overhead of exactly 1. Hello traffic is reported separately and never
//! enters the overhead.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocols::ProtocolKind;
use crate::sr::SrMode;

/// Column order of the results CSV.
pub const CSV_COLUMNS: [&str; 18] = [
    "scenario_id",
    "seed",
    "protocol",
    "sr_mode",
    "sr_p",
    "sr_n",
    "node_count",
    "drop_p",
    "speed_mps",
    "nwb_index",
    "origin",
    "connected",
    "covered",
    "transmissions",
    "coverage",
    "norm_overhead",
    "hello_tx",
    "quiescent",
];

/// 97.5% quantile of the standard normal.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    Empty,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
}

/// Identifies the experiment cell and seed a run belongs to.
#[derive(Clone, Debug, PartialEq)]
pub struct RunDescriptor {
    pub scenario_id: u64,
    pub seed: u64,
    pub protocol: ProtocolKind,
    pub sr: SrMode,
    pub node_count: usize,
    pub drop_p: f64,
    pub speed_mps: f64,
}

/// Raw counters collected by the simulation for one NWB.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NwbTrace {
    pub nwb_index: u32,
    pub origin: u32,
    pub covered: u32,
    pub transmissions: u32,
    pub hello_tx: u64,
    pub quiescent: bool,
    pub connected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_id: u64,
    pub seed: u64,
    pub protocol: String,
    pub sr_mode: String,
    pub sr_p: f64,
    pub sr_n: u32,
    pub node_count: usize,
    pub drop_p: f64,
    pub speed_mps: f64,
    pub nwb_index: u32,
    pub origin: u32,
    pub connected: bool,
    pub covered: u32,
    pub transmissions: u32,
    pub coverage: f64,
    pub norm_overhead: f64,
    pub hello_tx: u64,
    pub quiescent: bool,
}

pub fn finalize_run(desc: &RunDescriptor, trace: &NwbTrace) -> RunRecord {
    let covered = trace.covered.max(1);
    RunRecord {
        scenario_id: desc.scenario_id,
        seed: desc.seed,
        protocol: desc.protocol.name().to_string(),
        sr_mode: desc.sr.label().to_string(),
        sr_p: desc.sr.p(),
        sr_n: desc.sr.n(),
        node_count: desc.node_count,
        drop_p: desc.drop_p,
        speed_mps: desc.speed_mps,
        nwb_index: trace.nwb_index,
        origin: trace.origin,
        connected: trace.connected,
        covered: trace.covered,
        transmissions: trace.transmissions,
        coverage: f64::from(trace.covered) / desc.node_count as f64,
        norm_overhead: f64::from(trace.transmissions) / f64::from(covered),
        hello_tx: trace.hello_tx,
        quiescent: trace.quiescent,
    }
}

impl RunRecord {
    /// Column value rendered as text, for grouping.
    pub fn field(&self, column: &str) -> Option<String> {
        Some(match column {
            "scenario_id" => self.scenario_id.to_string(),
            "seed" => self.seed.to_string(),
            "protocol" => self.protocol.clone(),
            "sr_mode" => self.sr_mode.clone(),
            "sr_p" => self.sr_p.to_string(),
            "sr_n" => self.sr_n.to_string(),
            "node_count" => self.node_count.to_string(),
            "drop_p" => self.drop_p.to_string(),
            "speed_mps" => self.speed_mps.to_string(),
            "nwb_index" => self.nwb_index.to_string(),
            "origin" => self.origin.to_string(),
            "connected" => self.connected.to_string(),
            "covered" => self.covered.to_string(),
            "transmissions" => self.transmissions.to_string(),
            "coverage" => self.coverage.to_string(),
            "norm_overhead" => self.norm_overhead.to_string(),
            "hello_tx" => self.hello_tx.to_string(),
            "quiescent" => self.quiescent.to_string(),
            _ => return None,
        })
    }
}

/// Sample mean, sample standard deviation and normal-approximation 95% CI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub stddev: f64,
    /// Half-width of the 95% confidence interval of the mean.
    pub ci95: f64,
}

impl Summary {
    /// Single-pass (Welford) accumulation.
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Result<Self, MetricsError> {
        let mut count = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in values {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        if count == 0 {
            return Err(MetricsError::Empty);
        }
        let stddev = if count > 1 {
            (m2 / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            count,
            mean,
            stddev,
            ci95: Z_95 * stddev / (count as f64).sqrt(),
        })
    }

    pub fn std_error(&self) -> f64 {
        self.stddev / (self.count as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRecord {
    /// `(column, value)` pairs of the group key.
    pub key: Vec<(String, String)>,
    pub runs: usize,
    pub coverage: Summary,
    pub norm_overhead: Summary,
}

fn compare_values(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

fn compare_keys(a: &[String], b: &[String]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| compare_values(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Groups quiescent records by `group_by` and summarizes each group.
///
/// Non-quiescent records are excluded with a warning. Groups come back sorted
/// by key, numeric columns compared numerically.
pub fn aggregate(records: &[RunRecord], group_by: &[&str]) -> Result<Vec<AggregateRecord>, MetricsError> {
    if let Some(bad) = group_by.iter().find(|c| !CSV_COLUMNS.contains(c)) {
        return Err(MetricsError::UnknownColumn(bad.to_string()));
    }
    let skipped = records.iter().filter(|r| !r.quiescent).count();
    if skipped > 0 {
        log::warn!("excluding {skipped} non-quiescent NWB record(s) from aggregates");
    }
    let mut groups: BTreeMap<Vec<String>, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.quiescent) {
        let key = group_by
            .iter()
            .map(|c| r.field(c).expect("column validated"))
            .collect();
        groups.entry(key).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut out: Vec<(Vec<String>, AggregateRecord)> = groups
        .into_iter()
        .map(|(key, rs)| {
            let agg = AggregateRecord {
                key: group_by
                    .iter()
                    .map(|c| c.to_string())
                    .zip(key.iter().cloned())
                    .collect(),
                runs: rs.len(),
                coverage: Summary::of(rs.iter().map(|r| r.coverage)).expect("non-empty group"),
                norm_overhead: Summary::of(rs.iter().map(|r| r.norm_overhead)).expect("non-empty group"),
            };
            (key, agg)
        })
        .collect();
    out.sort_by(|a, b| compare_keys(&a.0, &b.0));
    Ok(out.into_iter().map(|(_, a)| a).collect())
}

/// Mean of a per-record metric for each seed, in ascending seed order.
pub fn per_seed_means<F>(records: &[RunRecord], metric: F) -> Vec<(u64, f64)>
where
    F: Fn(&RunRecord) -> f64,
{
    let mut by_seed: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.quiescent) {
        let e = by_seed.entry(r.seed).or_default();
        e.0 += metric(r);
        e.1 += 1;
    }
    by_seed
        .into_iter()
        .map(|(s, (sum, n))| (s, sum / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(n: usize) -> RunDescriptor {
        RunDescriptor {
            scenario_id: 0,
            seed: 1,
            protocol: ProtocolKind::Flooding,
            sr: SrMode::None,
            node_count: n,
            drop_p: 0.0,
            speed_mps: 0.0,
        }
    }

    fn record(coverage: f64) -> RunRecord {
        RunRecord {
            coverage,
            norm_overhead: 1.0,
            ..finalize_run(&desc(10), &NwbTrace { covered: 1, transmissions: 1, quiescent: true, ..NwbTrace::default() })
        }
    }

    #[test]
    fn chain_flooding_record() {
        let r = finalize_run(
            &desc(5),
            &NwbTrace { covered: 5, transmissions: 5, quiescent: true, connected: true, ..NwbTrace::default() },
        );
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.norm_overhead, 1.0);
    }

    #[test]
    fn isolated_origin_record() {
        let r = finalize_run(&desc(30), &NwbTrace { covered: 1, transmissions: 1, ..NwbTrace::default() });
        assert_eq!(r.coverage, 1.0 / 30.0);
        assert_eq!(r.norm_overhead, 1.0);
    }

    #[test]
    fn doubled_transmissions() {
        let r = finalize_run(&desc(30), &NwbTrace { covered: 30, transmissions: 60, ..NwbTrace::default() });
        assert_eq!(r.norm_overhead, 2.0);
    }

    #[test]
    fn identical_records_have_no_spread() {
        let rs = vec![record(0.7); 5];
        let agg = aggregate(&rs, &["protocol"]).unwrap();
        assert_eq!(agg.len(), 1);
        assert_eq!(agg[0].coverage.stddev, 0.0);
        assert_eq!(agg[0].coverage.ci95, 0.0);
    }

    #[test]
    fn mean_of_two() {
        let agg = aggregate(&[record(0.4), record(0.6)], &[]).unwrap();
        assert!((agg[0].coverage.mean - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(aggregate(&[], &["protocol"]), Err(MetricsError::Empty));
        assert_eq!(
            aggregate(&[record(0.5)], &["colour"]),
            Err(MetricsError::UnknownColumn("colour".into()))
        );
        assert_eq!(Summary::of(std::iter::empty()), Err(MetricsError::Empty));
    }

    #[test]
    fn non_quiescent_records_are_excluded() {
        let mut bad = record(0.0);
        bad.quiescent = false;
        let agg = aggregate(&[record(1.0), bad], &[]).unwrap();
        assert_eq!(agg[0].runs, 1);
        assert_eq!(agg[0].coverage.mean, 1.0);
    }

    #[test]
    fn numeric_group_order() {
        let mut a = record(0.1);
        a.node_count = 100;
        let mut b = record(0.2);
        b.node_count = 30;
        let agg = aggregate(&[a, b], &["node_count"]).unwrap();
        assert_eq!(agg[0].key[0].1, "30");
        assert_eq!(agg[1].key[0].1, "100");
    }

    #[test]
    fn every_column_is_addressable() {
        let r = record(0.5);
        for c in CSV_COLUMNS {
            assert!(r.field(c).is_some(), "{c}");
        }
    }
}
