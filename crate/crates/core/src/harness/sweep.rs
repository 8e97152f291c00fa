use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{finalize_run, RunDescriptor, RunRecord};
use crate::mobility::{MobilityConfig, MobilityKind};
use crate::scenario::Scenario;
use crate::simulation::{run_scenario, SimError};

use super::config::SweepConfig;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("scenario {scenario_id} seed {seed}: {source}")]
    Sim {
        scenario_id: u64,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One point of the experiment matrix, before seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub scenario_id: u64,
    pub scenario: Scenario,
    pub nwb_count: usize,
}

fn mobility_for(base: &MobilityConfig, speed: f64) -> MobilityConfig {
    let mut m = *base;
    if speed > 0.0 {
        m.kind = MobilityKind::RandomWaypoint;
        m.mean_speed = speed;
    } else {
        m.kind = MobilityKind::Static;
        m.mean_speed = 0.0;
    }
    m
}

/// Cells in axis order protocol, SR mode, drop, node count, speed, each axis
/// sorted ascending. `scenario_id` is the position in this order.
pub fn enumerate_cells(cfg: &SweepConfig) -> Vec<Cell> {
    let c = cfg.normalized();
    let mut out = Vec::new();
    for &protocol in &c.protocols {
        for &sr in &c.sr_modes {
            for &drop in &c.drop_probabilities {
                for &nodes in &c.node_counts {
                    for &speed in &c.speeds {
                        let mut s = c.base.clone();
                        s.protocol = protocol;
                        s.sr.mode = sr;
                        s.loss.drop_probability = drop;
                        s.node_count = nodes;
                        s.mobility = mobility_for(&c.base.mobility, speed);
                        out.push(Cell {
                            scenario_id: out.len() as u64,
                            scenario: s,
                            nwb_count: c.nwbs_per_seed.count(nodes),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs one seeded cell and returns its per-NWB records.
pub fn run_cell(cell: &Cell, seed: u64) -> Result<Vec<RunRecord>, SimError> {
    let mut s = cell.scenario.clone();
    s.seed = seed;
    let run = run_scenario(&s, cell.nwb_count)?;
    let desc = RunDescriptor {
        scenario_id: cell.scenario_id,
        seed,
        protocol: s.protocol,
        sr: s.sr.mode,
        node_count: s.node_count,
        drop_p: s.loss.drop_probability,
        speed_mps: s.mobility.reported_speed(),
    };
    Ok(run.outcomes.iter().map(|o| finalize_run(&desc, &o.trace)).collect())
}

/// Runs the whole matrix on `jobs` worker threads (0 picks the core count).
///
/// Output order is cell, then seed, then NWB, independent of `jobs`.
pub fn run_sweep(cfg: &SweepConfig, jobs: usize) -> Result<Vec<RunRecord>, SweepError> {
    let cells = enumerate_cells(cfg);
    let work: Vec<(&Cell, u64)> = cells
        .iter()
        .flat_map(|c| (0..cfg.seeds).map(move |k| (c, cfg.base.seed + k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    log::info!("running {} cells x {} seeds on {} threads", cells.len(), cfg.seeds, pool.current_num_threads());
    let chunks: Vec<Vec<RunRecord>> = pool.install(|| {
        work.par_iter()
            .map(|&(cell, seed)| {
                run_cell(cell, seed).map_err(|source| SweepError::Sim {
                    scenario_id: cell.scenario_id,
                    seed,
                    source,
                })
            })
            .collect::<Result<_, _>>()
    })?;
    let records: Vec<RunRecord> = chunks.into_iter().flatten().collect();
    let stalled = records.iter().filter(|r| !r.quiescent).count();
    if stalled > 0 {
        log::warn!("{stalled} NWB(s) did not reach quiescence before the next origination");
    }
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::ProtocolKind;
    use crate::sr::SrMode;

    #[test]
    fn cell_order_and_ids() {
        let cfg = SweepConfig::parse(
            "sweep.protocols = [sba, flooding]\nsweep.sr_modes = [counter:2, none]\nsweep.speeds = [15, 0]",
        )
        .unwrap();
        let cells = enumerate_cells(&cfg);
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].scenario.protocol, ProtocolKind::Flooding);
        assert_eq!(cells[0].scenario.sr.mode, SrMode::None);
        assert_eq!(cells[0].scenario.mobility.kind, MobilityKind::Static);
        assert_eq!(cells[1].scenario.mobility.kind, MobilityKind::RandomWaypoint);
        assert_eq!(cells[1].scenario.mobility.mean_speed, 15.0);
        assert_eq!(cells[2].scenario.sr.mode, SrMode::Counter { n: 2 });
        assert_eq!(cells[7].scenario.protocol, ProtocolKind::Sba);
        assert!(cells.iter().enumerate().all(|(i, c)| c.scenario_id == i as u64));
    }

    #[test]
    fn rows_match_prediction() {
        let cfg = SweepConfig::parse(
            "node_count = 8\nsweep.seeds = 2\nsweep.drop_probabilities = [0, 0.5]\nsweep.nwbs_per_seed = 3",
        )
        .unwrap();
        let rows = run_sweep(&cfg, 2).unwrap();
        assert_eq!(rows.len(), cfg.row_count());
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert_eq!(rows[0].seed, 1);
        assert_eq!(rows[3].seed, 2);
        assert_eq!(rows[6].drop_p, 0.5);
    }

    #[test]
    fn header_order() {
        let cfg = SweepConfig::parse("node_count = 4\nsweep.seeds = 1\nsweep.nwbs_per_seed = 1").unwrap();
        let mut buf = Vec::new();
        write_csv(&run_sweep(&cfg, 1).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, crate::metrics::CSV_COLUMNS.join(","));
    }
}
