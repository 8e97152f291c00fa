//! Flat `key = value` configuration files with dotted keys.
//!
//! ```text
//! # 30 nodes, controlled drop
//! node_count = 30
//! protocol = sba
//! protocol.rad_max = 0.05
//! loss.drop_probability = 0.3
//! sweep.protocols = [flooding, lba, sba, ahbp, dcb]
//! sweep.drop_probabilities = [0, 0.1, 0.2]
//! ```
//!
//! Values are numbers, booleans, bare or double-quoted strings, or
//! bracketed comma-separated lists of those. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::mobility::MobilityKind;
use crate::protocols::ProtocolKind;
use crate::radio::LossKind;
use crate::scenario::Scenario;
use crate::sr::SrMode;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("`{0}` must not be empty")]
    EmptyAxis(&'static str),
    #[error("sweep has {runs} runs, above sweep.run_cap = {cap}")]
    RunCap { runs: usize, cap: usize },
}

pub const KNOWN_KEYS: &[&str] = &[
    "area_width",
    "area_height",
    "node_count",
    "radio_range",
    "seed",
    "nwb_spacing",
    "warmup",
    "require_connected",
    "loss.kind",
    "loss.drop_probability",
    "loss.drop_applies_to_hellos",
    "mobility.kind",
    "mobility.mean_speed",
    "mobility.pause_time",
    "mobility.hello_period",
    "mobility.expiry_factor",
    "mobility.position_update_period",
    "protocol",
    "protocol.jitter_max",
    "protocol.rad_max",
    "protocol.lba.threshold_fraction",
    "protocol.lba.mc_samples",
    "sr.mode",
    "sr.p",
    "sr.n",
    "sr.timeout",
    "sweep.protocols",
    "sweep.sr_modes",
    "sweep.drop_probabilities",
    "sweep.node_counts",
    "sweep.speeds",
    "sweep.seeds",
    "sweep.nwbs_per_seed",
    "sweep.run_cap",
];

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        s[1..s.len() - 1].to_string()
    } else {
        s.to_string()
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_flat(text: &str) -> Result<BTreeMap<String, Value>, ConfigError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: idx + 1,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        let value = value.trim();
        let value = if let Some(inner) = value.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                message: format!("unterminated list for `{key}`"),
            })?;
            Value::List(
                inner
                    .split(',')
                    .map(unquote)
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        } else {
            Value::Scalar(unquote(value))
        };
        if out.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }
    Ok(out)
}

/// How many NWBs each seed runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NwbsPerSeed {
    /// One NWB per node, each node originating once.
    PerNode,
    Fixed(usize),
}

impl NwbsPerSeed {
    pub fn count(self, node_count: usize) -> usize {
        match self {
            NwbsPerSeed::PerNode => node_count,
            NwbsPerSeed::Fixed(k) => k,
        }
    }
}

/// A base scenario plus the axes of an experiment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub base: Scenario,
    pub protocols: Vec<ProtocolKind>,
    pub sr_modes: Vec<SrMode>,
    pub drop_probabilities: Vec<f64>,
    pub node_counts: Vec<usize>,
    /// Mean speeds in m/s; 0 means a static deployment.
    pub speeds: Vec<f64>,
    pub seeds: u64,
    pub nwbs_per_seed: NwbsPerSeed,
    /// Upper bound on `cells x seeds`.
    pub run_cap: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::single(Scenario::default())
    }
}

struct Reader {
    map: BTreeMap<String, Value>,
}

impl Reader {
    fn err(key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Scalar(s)) => Ok(Some(s)),
            Some(Value::List(_)) => Err(Self::err(key, "expected a single value, found a list")),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::List(v)) => Ok(Some(v.clone())),
            Some(Value::Scalar(s)) => Ok(Some(vec![s.clone()])),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        self.scalar(key)?
            .map(|s| s.parse::<T>().map_err(|_| Self::err(key, format!("`{s}` is not {what}"))))
            .transpose()
    }

    fn set<T: std::str::FromStr>(&self, key: &str, what: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.parse(key, what)? {
            *slot = v;
        }
        Ok(())
    }

    fn parse_list<T, F>(&self, key: &str, f: F) -> Result<Option<Vec<T>>, ConfigError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        self.list(key)?
            .map(|items| {
                items
                    .iter()
                    .map(|s| f(s).map_err(|m| Self::err(key, m)))
                    .collect::<Result<Vec<T>, _>>()
            })
            .transpose()
    }
}

fn number<T: std::str::FromStr>(what: &'static str) -> impl Fn(&str) -> Result<T, String> {
    move |s| s.parse::<T>().map_err(|_| format!("`{s}` is not {what}"))
}

impl SweepConfig {
    /// A sweep with a single cell: the base scenario itself.
    pub fn single(base: Scenario) -> Self {
        Self {
            protocols: vec![base.protocol],
            sr_modes: vec![base.sr.mode],
            drop_probabilities: vec![base.loss.drop_probability],
            node_counts: vec![base.node_count],
            speeds: vec![base.mobility.reported_speed()],
            seeds: 20,
            nwbs_per_seed: NwbsPerSeed::PerNode,
            run_cap: 100_000,
            base,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let r = Reader { map: parse_flat(text)? };
        let mut s = Scenario::default();
        r.set("area_width", "a number", &mut s.area_width)?;
        r.set("area_height", "a number", &mut s.area_height)?;
        r.set("node_count", "a node count", &mut s.node_count)?;
        r.set("radio_range", "a number", &mut s.radio_range)?;
        r.set("seed", "an unsigned integer", &mut s.seed)?;
        r.set("nwb_spacing", "a number", &mut s.nwb_spacing)?;
        r.set("warmup", "a number", &mut s.warmup)?;
        r.set("require_connected", "true or false", &mut s.require_connected)?;

        if let Some(k) = r.scalar("loss.kind")? {
            s.loss.kind = match k.to_ascii_lowercase().as_str() {
                "perfect" => LossKind::Perfect,
                "bernoulli" | "bernoulli_drop" | "bernoullidrop" => LossKind::BernoulliDrop,
                _ => return Err(Reader::err("loss.kind", format!("`{k}` (expected perfect or bernoulli)"))),
            };
        }
        r.set("loss.drop_probability", "a probability", &mut s.loss.drop_probability)?;
        r.set("loss.drop_applies_to_hellos", "true or false", &mut s.loss.drop_applies_to_hellos)?;

        if let Some(k) = r.scalar("mobility.kind")? {
            s.mobility.kind = match k.to_ascii_lowercase().as_str() {
                "static" => MobilityKind::Static,
                "random_waypoint" | "randomwaypoint" | "rwp" => MobilityKind::RandomWaypoint,
                _ => {
                    return Err(Reader::err(
                        "mobility.kind",
                        format!("`{k}` (expected static or random_waypoint)"),
                    ))
                }
            };
        }
        r.set("mobility.mean_speed", "a number", &mut s.mobility.mean_speed)?;
        r.set("mobility.pause_time", "a number", &mut s.mobility.pause_time)?;
        r.set("mobility.hello_period", "a number", &mut s.mobility.hello_period)?;
        r.set("mobility.expiry_factor", "a number", &mut s.mobility.expiry_factor)?;
        r.set(
            "mobility.position_update_period",
            "a number",
            &mut s.mobility.position_update_period,
        )?;

        if let Some(p) = r.scalar("protocol")? {
            s.protocol = p.parse().map_err(|m| Reader::err("protocol", m))?;
        }
        r.set("protocol.jitter_max", "a number", &mut s.params.jitter_max)?;
        r.set("protocol.rad_max", "a number", &mut s.params.rad_max)?;
        r.set(
            "protocol.lba.threshold_fraction",
            "a number",
            &mut s.params.lba_threshold_fraction,
        )?;
        r.set("protocol.lba.mc_samples", "a sample count", &mut s.params.lba_mc_samples)?;

        let sr_p: Option<f64> = r.parse("sr.p", "a probability")?;
        let sr_n: Option<u32> = r.parse("sr.n", "a count")?;
        r.set("sr.timeout", "a number", &mut s.sr.timeout)?;
        s.sr.mode = match r.scalar("sr.mode")?.map(str::to_ascii_lowercase).as_deref() {
            None | Some("none") => SrMode::None,
            Some("probabilistic") | Some("prob") => SrMode::Probabilistic { p: sr_p.unwrap_or(0.5) },
            Some("counter") => SrMode::Counter { n: sr_n.unwrap_or(2) },
            Some(other) => {
                return Err(Reader::err(
                    "sr.mode",
                    format!("`{other}` (expected none, probabilistic or counter)"),
                ))
            }
        };
        if let SrMode::Probabilistic { p } = s.sr.mode {
            if !(0.0..=1.0).contains(&p) {
                return Err(Reader::err("sr.p", format!("{p} is not a probability")));
            }
        }
        if let SrMode::Counter { n: 0 } = s.sr.mode {
            return Err(Reader::err("sr.n", "must be at least 1"));
        }

        let mut cfg = SweepConfig::single(s);
        if let Some(v) = r.parse_list("sweep.protocols", |x| x.parse::<ProtocolKind>())? {
            cfg.protocols = v;
        }
        if let Some(v) = r.parse_list("sweep.sr_modes", |x| x.parse::<SrMode>())? {
            cfg.sr_modes = v;
        }
        if let Some(v) = r.parse_list("sweep.drop_probabilities", number::<f64>("a probability"))? {
            if let Some(bad) = v.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Reader::err("sweep.drop_probabilities", format!("{bad} is not a probability")));
            }
            cfg.drop_probabilities = v;
        }
        if let Some(v) = r.parse_list("sweep.node_counts", number::<usize>("a node count"))? {
            cfg.node_counts = v;
        }
        if let Some(v) = r.parse_list("sweep.speeds", number::<f64>("a speed"))? {
            if let Some(bad) = v.iter().find(|x| !(**x >= 0.0)) {
                return Err(Reader::err("sweep.speeds", format!("{bad} is not a valid speed")));
            }
            cfg.speeds = v;
        }
        r.set("sweep.seeds", "a seed count", &mut cfg.seeds)?;
        r.set("sweep.run_cap", "a run count", &mut cfg.run_cap)?;
        if let Some(v) = r.scalar("sweep.nwbs_per_seed")? {
            cfg.nwbs_per_seed = match v {
                "per_node" | "per-node" => NwbsPerSeed::PerNode,
                _ => NwbsPerSeed::Fixed(
                    v.parse()
                        .map_err(|_| Reader::err("sweep.nwbs_per_seed", format!("`{v}` (expected per_node or a count)")))?,
                ),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sorted, de-duplicated copy of every axis.
    pub fn normalized(&self) -> Self {
        let mut c = self.clone();
        c.protocols.sort();
        c.protocols.dedup();
        c.sr_modes.sort_by(|a, b| {
            let (ra, pa) = a.sort_key();
            let (rb, pb) = b.sort_key();
            ra.cmp(&rb).then(pa.total_cmp(&pb))
        });
        c.sr_modes.dedup();
        c.drop_probabilities.sort_by(f64::total_cmp);
        c.drop_probabilities.dedup();
        c.node_counts.sort_unstable();
        c.node_counts.dedup();
        c.speeds.sort_by(f64::total_cmp);
        c.speeds.dedup();
        c
    }

    pub fn cell_count(&self) -> usize {
        let c = self.normalized();
        c.protocols.len() * c.sr_modes.len() * c.drop_probabilities.len() * c.node_counts.len() * c.speeds.len()
    }

    pub fn run_count(&self) -> usize {
        self.cell_count() * self.seeds as usize
    }

    /// Total result rows the sweep will produce.
    pub fn row_count(&self) -> usize {
        let c = self.normalized();
        let per_cell: usize = c
            .node_counts
            .iter()
            .map(|&n| c.nwbs_per_seed.count(n))
            .sum::<usize>()
            * c.protocols.len()
            * c.sr_modes.len()
            * c.drop_probabilities.len()
            * c.speeds.len();
        per_cell * self.seeds as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.protocols.is_empty() {
            return Err(ConfigError::EmptyAxis("sweep.protocols"));
        }
        if self.sr_modes.is_empty() {
            return Err(ConfigError::EmptyAxis("sweep.sr_modes"));
        }
        if self.drop_probabilities.is_empty() {
            return Err(ConfigError::EmptyAxis("sweep.drop_probabilities"));
        }
        if self.node_counts.is_empty() {
            return Err(ConfigError::EmptyAxis("sweep.node_counts"));
        }
        if self.speeds.is_empty() {
            return Err(ConfigError::EmptyAxis("sweep.speeds"));
        }
        if self.seeds == 0 {
            return Err(ConfigError::Value {
                key: "sweep.seeds".into(),
                message: "must be at least 1".into(),
            });
        }
        let runs = self.run_count();
        if runs > self.run_cap {
            return Err(ConfigError::RunCap { runs, cap: self.run_cap });
        }
        for cell in super::sweep::enumerate_cells(self) {
            cell.scenario.validate().map_err(|e| ConfigError::Value {
                key: e.key.to_string(),
                message: e.reason,
            })?;
        }
        Ok(())
    }

    /// Renders the sweep back into the flat config format.
    pub fn to_config_text(&self) -> String {
        let s = &self.base;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("area_width", s.area_width.to_string());
        kv("area_height", s.area_height.to_string());
        kv("node_count", s.node_count.to_string());
        kv("radio_range", s.radio_range.to_string());
        kv("seed", s.seed.to_string());
        kv("nwb_spacing", s.nwb_spacing.to_string());
        kv("warmup", s.warmup.to_string());
        kv("require_connected", s.require_connected.to_string());
        kv(
            "loss.kind",
            match s.loss.kind {
                LossKind::Perfect => "perfect",
                LossKind::BernoulliDrop => "bernoulli",
            }
            .into(),
        );
        kv("loss.drop_probability", s.loss.drop_probability.to_string());
        kv("loss.drop_applies_to_hellos", s.loss.drop_applies_to_hellos.to_string());
        kv(
            "mobility.kind",
            match s.mobility.kind {
                MobilityKind::Static => "static",
                MobilityKind::RandomWaypoint => "random_waypoint",
            }
            .into(),
        );
        kv("mobility.mean_speed", s.mobility.mean_speed.to_string());
        kv("mobility.pause_time", s.mobility.pause_time.to_string());
        kv("mobility.hello_period", s.mobility.hello_period.to_string());
        kv("mobility.expiry_factor", s.mobility.expiry_factor.to_string());
        kv(
            "mobility.position_update_period",
            s.mobility.position_update_period.to_string(),
        );
        kv("protocol", s.protocol.name().into());
        kv("protocol.jitter_max", s.params.jitter_max.to_string());
        kv("protocol.rad_max", s.params.rad_max.to_string());
        kv(
            "protocol.lba.threshold_fraction",
            s.params.lba_threshold_fraction.to_string(),
        );
        kv("protocol.lba.mc_samples", s.params.lba_mc_samples.to_string());
        kv("sr.mode", s.sr.mode.label().into());
        if let SrMode::Probabilistic { p } = s.sr.mode {
            kv("sr.p", p.to_string());
        }
        if let SrMode::Counter { n } = s.sr.mode {
            kv("sr.n", n.to_string());
        }
        kv("sr.timeout", s.sr.timeout.to_string());
        let list = |items: Vec<String>| format!("[{}]", items.join(", "));
        kv("sweep.protocols", list(self.protocols.iter().map(|p| p.name().to_string()).collect()));
        kv("sweep.sr_modes", list(self.sr_modes.iter().map(|m| m.to_string()).collect()));
        kv(
            "sweep.drop_probabilities",
            list(self.drop_probabilities.iter().map(|p| p.to_string()).collect()),
        );
        kv("sweep.node_counts", list(self.node_counts.iter().map(|n| n.to_string()).collect()));
        kv("sweep.speeds", list(self.speeds.iter().map(|v| v.to_string()).collect()));
        kv("sweep.seeds", self.seeds.to_string());
        kv(
            "sweep.nwbs_per_seed",
            match self.nwbs_per_seed {
                NwbsPerSeed::PerNode => "per_node".into(),
                NwbsPerSeed::Fixed(k) => k.to_string(),
            },
        );
        kv("sweep.run_cap", self.run_cap.to_string());
        out
    }
}
