use thiserror::Error;

use crate::mobility::MobilityConfig;
use crate::protocols::{ProtocolKind, ProtocolParams};
use crate::radio::LossModelConfig;
use crate::sr::{SrConfig, SrMode};

#[derive(Debug, Error, PartialEq)]
#[error("invalid `{key}`: {reason}")]
pub struct InvalidScenario {
    pub key: &'static str,
    pub reason: String,
}

/// Full configuration of one simulated deployment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub area_width: f64,
    pub area_height: f64,
    pub node_count: usize,
    pub radio_range: f64,
    pub seed: u64,
    pub loss: LossModelConfig,
    pub mobility: MobilityConfig,
    pub protocol: ProtocolKind,
    pub params: ProtocolParams,
    pub sr: SrConfig,
    /// Time between successive NWB originations.
    pub nwb_spacing: f64,
    /// Time before the first NWB, letting neighbor tables converge.
    pub warmup: f64,
    /// Redraw placements until the unit-disk graph is connected.
    pub require_connected: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            area_width: 1000.0,
            area_height: 1000.0,
            node_count: 30,
            radio_range: 250.0,
            seed: 1,
            loss: LossModelConfig::default(),
            mobility: MobilityConfig::default(),
            protocol: ProtocolKind::Flooding,
            params: ProtocolParams::default(),
            sr: SrConfig::default(),
            nwb_spacing: 2.0,
            warmup: 3.0,
            require_connected: false,
        }
    }
}

fn check(ok: bool, key: &'static str, reason: impl Into<String>) -> Result<(), InvalidScenario> {
    if ok {
        Ok(())
    } else {
        Err(InvalidScenario {
            key,
            reason: reason.into(),
        })
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), InvalidScenario> {
        check(self.node_count >= 1, "node_count", "must be at least 1")?;
        check(
            self.area_width > 0.0 && self.area_height > 0.0,
            "area_width",
            "area dimensions must be positive",
        )?;
        check(self.radio_range > 0.0, "radio_range", "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.loss.drop_probability),
            "loss.drop_probability",
            format!("{} is not a probability", self.loss.drop_probability),
        )?;
        check(self.mobility.mean_speed >= 0.0, "mobility.mean_speed", "must be non-negative")?;
        check(self.mobility.pause_time >= 0.0, "mobility.pause_time", "must be non-negative")?;
        check(self.mobility.hello_period > 0.0, "mobility.hello_period", "must be positive")?;
        check(
            self.mobility.expiry_factor > 1.0,
            "mobility.expiry_factor",
            "expiry must exceed one hello period",
        )?;
        check(self.params.jitter_max >= 0.0, "protocol.jitter_max", "must be non-negative")?;
        check(self.params.rad_max >= 0.0, "protocol.rad_max", "must be non-negative")?;
        check(
            (0.0..=1.0).contains(&self.params.lba_threshold_fraction),
            "protocol.lba.threshold_fraction",
            "must lie in [0, 1]",
        )?;
        check(self.params.lba_mc_samples >= 1, "protocol.lba.mc_samples", "must be at least 1")?;
        match self.sr.mode {
            SrMode::Probabilistic { p } => check((0.0..=1.0).contains(&p), "sr.p", "must lie in [0, 1]")?,
            SrMode::Counter { n } => check(n >= 1, "sr.n", "must be at least 1")?,
            SrMode::None => {}
        }
        check(
            self.sr.timeout > self.params.rad_max + self.params.jitter_max,
            "sr.timeout",
            "must exceed protocol.rad_max + protocol.jitter_max",
        )?;
        check(
            self.nwb_spacing > self.sr.timeout + self.params.rad_max + self.params.jitter_max,
            "nwb_spacing",
            "too small for an NWB to complete",
        )?;
        check(self.warmup >= 0.0, "warmup", "must be non-negative")?;
        Ok(())
    }

    pub fn with_protocol(mut self, protocol: ProtocolKind) -> Self {
        self.protocol = protocol;
        self
    }

    pub fn with_drop(mut self, p: f64) -> Self {
        self.loss.drop_probability = p;
        self
    }

    pub fn with_sr(mut self, mode: SrMode) -> Self {
        self.sr.mode = mode;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        Scenario::default().validate().unwrap();
    }

    #[test]
    fn bad_values_name_their_key() {
        let s = Scenario::default().with_drop(1.5);
        assert_eq!(s.validate().unwrap_err().key, "loss.drop_probability");
        let s = Scenario {
            node_count: 0,
            ..Scenario::default()
        };
        assert_eq!(s.validate().unwrap_err().key, "node_count");
        let mut s = Scenario::default();
        s.sr.timeout = 0.01;
        assert_eq!(s.validate().unwrap_err().key, "sr.timeout");
        let s = Scenario {
            nwb_spacing: 0.05,
            ..Scenario::default()
        };
        assert_eq!(s.validate().unwrap_err().key, "nwb_spacing");
    }
}
