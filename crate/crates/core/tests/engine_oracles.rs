use std::collections::HashSet;

use nwbsim::engine::{RngStream, RunOutcome, Scheduler, StreamName};
use nwbsim::mobility::MobilityConfig;
use nwbsim::protocols::ProtocolKind;
use nwbsim::simulation::{EventKind, Simulation};
use nwbsim::sr::SrMode;
use nwbsim::Scenario;
use rand::Rng;

#[test]
fn dispatch_order_matches_stable_sort() {
    let mut rng = RngStream::new(7, StreamName::Traffic).fork(&[]);
    let mut sched = Scheduler::new();
    let mut expected = Vec::with_capacity(100_000);
    for i in 0..100_000u32 {
        // coarse grid so many times collide
        let t = f64::from(rng.gen_range(0..5_000u32)) * 0.25;
        sched.schedule(t, i).unwrap();
        expected.push((t, i));
    }
    expected.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut got = Vec::with_capacity(expected.len());
    while let Some(ev) = sched.pop() {
        got.push((ev.time, ev.payload));
    }
    assert_eq!(got, expected);
}

#[test]
fn cancelled_events_never_dispatch() {
    let mut rng = RngStream::new(3, StreamName::Traffic).fork(&[]);
    let mut sched = Scheduler::new();
    let mut cancelled = HashSet::new();
    let handles: Vec<_> = (0..10_000u32)
        .map(|i| (i, sched.schedule(rng.gen_range(0.0..100.0), i).unwrap()))
        .collect();
    for (i, h) in handles {
        if rng.gen_bool(0.3) {
            assert!(sched.cancel(h));
            assert!(!sched.cancel(h));
            cancelled.insert(i);
        }
    }
    let mut last = f64::NEG_INFINITY;
    let mut seen = 0;
    let outcome = sched.run_until(f64::INFINITY, |s, ev| {
        assert!(!cancelled.contains(&ev.payload));
        assert!(ev.time >= last);
        assert_eq!(s.now(), ev.time);
        last = ev.time;
        seen += 1;
    });
    assert_eq!(outcome, RunOutcome::Quiescent);
    assert_eq!(seen + cancelled.len(), 10_000);
}

#[test]
fn handler_scheduled_events_respect_order() {
    let mut sched = Scheduler::new();
    sched.schedule(0.0, 0u32).unwrap();
    let mut times = Vec::new();
    sched.run_until(10.0, |s, ev| {
        times.push(ev.time);
        if ev.payload < 50 {
            s.schedule_in(0.1, ev.payload + 1).unwrap();
            // same-time event goes after already queued ones
            s.schedule_in(0.0, 1000).unwrap();
        }
    });
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

fn traced(s: &Scenario) -> Vec<nwbsim::simulation::TraceEntry> {
    Simulation::new(s.clone())
        .unwrap()
        .record_events(true)
        .run(s.node_count)
        .unwrap()
        .event_trace
        .unwrap()
}

#[test]
fn identical_inputs_give_identical_event_traces() {
    for protocol in ProtocolKind::ALL {
        let s = Scenario {
            node_count: 20,
            protocol,
            mobility: MobilityConfig::random_waypoint(10.0),
            ..Scenario::default()
        }
        .with_drop(0.2)
        .with_sr(SrMode::Counter { n: 2 });
        let a = traced(&s);
        assert!(a.len() > 100);
        assert_eq!(a, traced(&s), "{protocol}");
        assert!(a.windows(2).all(|w| w[0].time <= w[1].time));
        let origins = a.iter().filter(|e| e.kind == EventKind::NwbOriginate).count();
        assert_eq!(origins, 20);
    }
}

#[test]
fn changing_the_seed_changes_the_trace() {
    let s = Scenario { node_count: 20, ..Scenario::default() }.with_drop(0.2);
    let other = Scenario { seed: 2, ..s.clone() };
    assert_ne!(traced(&s), traced(&other));
}
