//! Selective rebroadcast: at most one extra transmission per node and NWB,
//! triggered either by a fixed probability or by hearing too few other
//! rebroadcasts within a timeout.
//!
//! SR only ever follows a base transmission, so nodes the base protocol keeps
//! silent (e.g. non-designated AHBP nodes) never rebroadcast.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::engine::SimTime;
use crate::protocols::{PolicyDecision, ProtocolState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SrMode {
    None,
    /// Extra rebroadcast with probability `p`, unconditional once scheduled.
    Probabilistic { p: f64 },
    /// Extra rebroadcast unless `n` receptions have been heard by the timeout.
    Counter { n: u32 },
}

impl SrMode {
    pub fn label(&self) -> &'static str {
        match self {
            SrMode::None => "none",
            SrMode::Probabilistic { .. } => "probabilistic",
            SrMode::Counter { .. } => "counter",
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            SrMode::Probabilistic { p } => *p,
            _ => 0.0,
        }
    }

    pub fn n(&self) -> u32 {
        match self {
            SrMode::Counter { n } => *n,
            _ => 0,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            SrMode::None => 0,
            SrMode::Probabilistic { .. } => 1,
            SrMode::Counter { .. } => 2,
        }
    }

    /// Ordering used for sweep axes: none, then probabilistic by `p`, then counter by `n`.
    pub fn sort_key(&self) -> (u8, f64) {
        let param = match self {
            SrMode::None => 0.0,
            SrMode::Probabilistic { p } => *p,
            SrMode::Counter { n } => f64::from(*n),
        };
        (self.rank(), param)
    }
}

impl fmt::Display for SrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SrMode::None => f.write_str("none"),
            SrMode::Probabilistic { p } => write!(f, "probabilistic:{p}"),
            SrMode::Counter { n } => write!(f, "counter:{n}"),
        }
    }
}

impl FromStr for SrMode {
    type Err = String;

    /// Accepts `none`, `probabilistic:<p>` (or `prob:<p>`) and `counter:<n>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s, None),
        };
        match (kind.to_ascii_lowercase().as_str(), arg) {
            ("none", None) => Ok(SrMode::None),
            ("probabilistic" | "prob", Some(a)) => {
                let p: f64 = a.parse().map_err(|_| format!("bad probability in `{s}`"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("probability out of [0,1] in `{s}`"));
                }
                Ok(SrMode::Probabilistic { p })
            }
            ("counter", Some(a)) => {
                let n: u32 = a.parse().map_err(|_| format!("bad counter threshold in `{s}`"))?;
                if n == 0 {
                    return Err(format!("counter threshold must be >= 1 in `{s}`"));
                }
                Ok(SrMode::Counter { n })
            }
            _ => Err(format!(
                "unknown SR mode `{s}` (expected none, probabilistic:<p> or counter:<n>)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SrConfig {
    pub mode: SrMode,
    pub timeout: SimTime,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            mode: SrMode::None,
            timeout: 0.100,
        }
    }
}

impl SrConfig {
    pub fn with_mode(mode: SrMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

/// SR timer to arm after a base transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SrTimer {
    pub delay: SimTime,
    /// Counter mode re-checks the heard count when the timer fires.
    pub conditional: bool,
}

/// Called right after a node's base transmission (origination included).
pub fn sr_after_transmit<R: Rng + ?Sized>(
    state: &ProtocolState,
    cfg: &SrConfig,
    rng: &mut R,
) -> Option<SrTimer> {
    if state.sr_transmitted || state.sr_timer.is_some() {
        return None;
    }
    match cfg.mode {
        SrMode::None => None,
        SrMode::Probabilistic { p } => (rng.gen::<f64>() < p).then_some(SrTimer {
            delay: cfg.timeout,
            conditional: false,
        }),
        SrMode::Counter { .. } => Some(SrTimer {
            delay: cfg.timeout,
            conditional: true,
        }),
    }
}

/// Called on every reception after the first. Returns true if the pending
/// counter timer should be cancelled.
pub fn sr_on_duplicate(state: &ProtocolState, cfg: &SrConfig) -> bool {
    match cfg.mode {
        SrMode::Counter { n } => state.sr_timer.is_some() && state.heard_count >= n,
        _ => false,
    }
}

/// Called when the SR timer fires uncancelled. The extra transmission reuses
/// the headers of the node's original one.
pub fn sr_fire(state: &mut ProtocolState, cfg: &SrConfig) -> PolicyDecision {
    state.sr_timer = None;
    if state.sr_transmitted || !state.transmitted {
        return PolicyDecision::no_transmit();
    }
    let go = match cfg.mode {
        SrMode::None => false,
        SrMode::Probabilistic { .. } => true,
        SrMode::Counter { n } => state.heard_count < n,
    };
    if !go {
        return PolicyDecision::no_transmit();
    }
    PolicyDecision {
        action: crate::protocols::Action::TransmitAt(0.0),
        forwarders: state.forwarders.clone(),
    }
}
