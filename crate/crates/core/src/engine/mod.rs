//! Deterministic event scheduling and keyed random streams.

mod rng;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

pub use rng::{RngStream, StreamName};

/// Virtual time, in seconds.
pub type SimTime = f64;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("cannot schedule at t={at} before the current clock t={now}")]
    InThePast { at: SimTime, now: SimTime },
    #[error("event time {0} is not a finite number")]
    NotFinite(SimTime),
}

/// Identifies one scheduled event so it can be cancelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimerHandle(u64);

impl TimerHandle {
    pub fn seq(self) -> u64 {
        self.0
    }
}

/// An event handed back by the scheduler.
#[derive(Debug)]
pub struct Dispatched<P> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Entry<P> {
    time: SimTime,
    seq: u64,
    payload: P,
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Entry<P> {}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// The queue drained.
    Quiescent,
    /// Events remain past the time limit.
    TimeLimit,
}

/// Time-ordered event queue with a virtual clock.
///
/// Dispatch order is `(time, seq)` lexicographic where `seq` is the
/// scheduling order, so simultaneous events fire first-scheduled-first.
pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<Entry<P>>>,
    live: HashSet<u64>,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            next_seq: 0,
            heap: BinaryHeap::new(),
            live: HashSet::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of scheduled, uncancelled events.
    pub fn pending(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn schedule(&mut self, time: SimTime, payload: P) -> Result<TimerHandle, ScheduleError> {
        if !time.is_finite() {
            return Err(ScheduleError::NotFinite(time));
        }
        if time < self.now {
            return Err(ScheduleError::InThePast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { time, seq, payload }));
        self.live.insert(seq);
        Ok(TimerHandle(seq))
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> Result<TimerHandle, ScheduleError> {
        self.schedule(self.now + delay, payload)
    }

    /// Suppresses a pending event. Returns false if it already fired or was
    /// already cancelled.
    pub fn cancel(&mut self, handle: TimerHandle) -> bool {
        self.live.remove(&handle.0)
    }

    pub fn is_pending(&self, handle: TimerHandle) -> bool {
        self.live.contains(&handle.0)
    }

    fn discard_cancelled(&mut self) {
        while let Some(Reverse(top)) = self.heap.peek() {
            if self.live.contains(&top.seq) {
                break;
            }
            self.heap.pop();
        }
    }

    /// Time of the next live event.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled();
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    /// Removes the next live event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Dispatched<P>> {
        self.discard_cancelled();
        let Reverse(e) = self.heap.pop()?;
        self.live.remove(&e.seq);
        self.now = e.time;
        Some(Dispatched {
            time: e.time,
            seq: e.seq,
            payload: e.payload,
        })
    }

    /// Dispatches events in order until the queue is empty or the next event
    /// lies beyond `max_time`. The handler may schedule further events.
    pub fn run_until<F>(&mut self, max_time: SimTime, mut handler: F) -> RunOutcome
    where
        F: FnMut(&mut Self, Dispatched<P>),
    {
        loop {
            match self.peek_time() {
                None => return RunOutcome::Quiescent,
                Some(t) if t > max_time => return RunOutcome::TimeLimit,
                Some(_) => {
                    let ev = self.pop().expect("peeked event exists");
                    handler(self, ev);
                }
            }
        }
    }
}
