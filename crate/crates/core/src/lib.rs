//! Discrete-event simulator for network-wide broadcast (NWB) in mobile ad hoc
//! networks.
//!
//! Five forwarding policies are provided (flooding, LBA, SBA, AHBP, DCB),
//! each optionally wrapped by selective rebroadcast (SR). Losses are injected
//! as receiver-side Bernoulli drops so that coverage and overhead can be
//! studied as a function of a controlled loss rate, node density and
//! mobility.
//!
//! The usual entry points are [`Scenario`] + [`simulation::run_scenario`] for
//! a single deployment, and [`harness::SweepConfig`] +
//! [`harness::run_sweep`] for experiment matrices.

pub mod engine;
pub mod harness;
pub mod metrics;
pub mod mobility;
pub mod protocols;
pub mod radio;
pub mod scenario;
pub mod simulation;
pub mod sr;
pub mod topology;

pub use scenario::Scenario;
pub use topology::{NodeId, Position, TopologySnapshot};
