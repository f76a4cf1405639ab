//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Keys are case-sensitive
//! (`k` and `K` differ); unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Metric, TildaConfig};

use super::synthetic::SyntheticSpec;

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(format!("line {}: empty key", n + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::config(format!("line {}: duplicate key {key}", n + 1)));
        }
    }
    Ok(out)
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn new(map: BTreeMap<String, String>, allowed: &[&str]) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("unknown key {k:?}")));
        }
        Ok(Keys { map })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(format!("invalid value {v:?} for {key}")))
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::config(format!("missing required key {key}")))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Everything a train/eval/simulate run needs besides the data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub model: TildaConfig,
    /// Train and predict through the fixed-point machine instead of the
    /// floating-point bank.
    pub quantize: bool,
    pub frequency_mhz: f64,
    pub seed: u64,
    /// Seed of the training stream order.
    pub stream_seed: u64,
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] =
        &["T", "P", "C", "k", "R", "metric", "quantize", "frequency_mhz", "seed", "stream_seed"];
    pub const DEFAULT_FREQUENCY_MHZ: f64 = 208.0;

    pub fn parse(text: &str) -> Result<Self> {
        let keys = Keys::new(parse_key_values(text)?, Self::KEYS)?;
        let metric = match keys.map.get("metric") {
            Some(m) => m.parse::<Metric>()?,
            None => Metric::default(),
        };
        let quantize = match keys.map.get("quantize") {
            Some(v) => parse_bool(v).ok_or_else(|| Error::config(format!("invalid boolean {v:?} for quantize")))?,
            None => false,
        };
        let model = TildaConfig::new(
            keys.require("T")?,
            keys.require("P")?,
            keys.require("C")?,
            keys.require("k")?,
            keys.or("R", 1)?,
        )?
        .with_metric(metric);
        let frequency_mhz: f64 = keys.or("frequency_mhz", Self::DEFAULT_FREQUENCY_MHZ)?;
        if !(frequency_mhz.is_finite() && frequency_mhz > 0.0) {
            return Err(Error::config("frequency_mhz must be positive"));
        }
        Ok(RunConfig {
            model,
            quantize,
            frequency_mhz,
            seed: keys.or("seed", 0)?,
            stream_seed: keys.or("stream_seed", 0)?,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_mhz * 1e6
    }
}

impl SyntheticSpec {
    pub const KEYS: &'static [&'static str] = &[
        "C",
        "T",
        "clusters_per_class",
        "cluster_spread",
        "center_scale",
        "train_per_class",
        "test_per_class",
        "R",
        "jitter",
        "seed",
    ];

    /// Parse a spec file; missing keys take the desk defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let keys = Keys::new(parse_key_values(text)?, Self::KEYS)?;
        let d = SyntheticSpec::default();
        let spec = SyntheticSpec {
            classes: keys.or("C", d.classes)?,
            dim: keys.or("T", d.dim)?,
            clusters_per_class: keys.or("clusters_per_class", d.clusters_per_class)?,
            cluster_spread: keys.or("cluster_spread", d.cluster_spread)?,
            center_scale: keys.or("center_scale", d.center_scale)?,
            train_per_class: keys.or("train_per_class", d.train_per_class)?,
            test_per_class: keys.or("test_per_class", d.test_per_class)?,
            versions: keys.or("R", d.versions)?,
            jitter: keys.or("jitter", d.jitter)?,
            seed: keys.or("seed", d.seed)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
