//! The incremental anchor-vector classifier.
//!
//! Feature vectors are cut into `P` contiguous parts. Each (class, part)
//! owns `k` anchor slots, each a running mean of the subvectors assigned to
//! it together with a counter. Learning picks the slot minimizing
//! `distance * counter` and folds the subvector into its mean. Prediction
//! classifies every part by its nearest nonempty anchor, takes a majority
//! vote over parts, and optionally a second vote over augmented versions.

mod bank;
mod quantized;
mod vote;

pub use bank::{AnchorBank, Prediction};
pub use quantized::{quantize_features, QuantizedBank};
pub use vote::{argmax_lowest, parallel_vote, sequential_vote, tally};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance used when comparing subvectors with anchors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Euclidean norm of the difference.
    L2,
    /// Squared Euclidean distance; what the accelerator computes.
    #[default]
    L2Sq,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        match self {
            Metric::L2 => sq.sqrt(),
            Metric::L2Sq => sq,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L2 => "l2",
            Metric::L2Sq => "l2sq",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" => Ok(Metric::L2),
            "l2sq" => Ok(Metric::L2Sq),
            other => Err(Error::config(format!("unknown metric {other:?} (expected l2 or l2sq)"))),
        }
    }
}

/// Model hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TildaConfig {
    /// Feature dimension `T`.
    pub dim: usize,
    /// Number of subspaces `P`; must divide `dim`.
    pub parts: usize,
    /// Number of classes `C`.
    pub classes: usize,
    /// Anchor slots per class per subspace `k`.
    pub anchors: usize,
    /// Augmented versions per input `R`.
    pub versions: usize,
    pub metric: Metric,
}

impl TildaConfig {
    pub fn new(dim: usize, parts: usize, classes: usize, anchors: usize, versions: usize) -> Result<Self> {
        let cfg = TildaConfig {
            dim,
            parts,
            classes,
            anchors,
            versions,
            metric: Metric::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("T", self.dim),
            ("P", self.parts),
            ("C", self.classes),
            ("k", self.anchors),
            ("R", self.versions),
        ];
        if let Some((name, _)) = named.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("{name} must be at least 1")));
        }
        if self.dim % self.parts != 0 {
            return Err(Error::config(format!(
                "P={} does not divide T={}",
                self.parts, self.dim
            )));
        }
        Ok(())
    }

    /// Length `T/P` of one subvector.
    pub fn part_len(&self) -> usize {
        self.dim / self.parts
    }

    /// Total anchor slots across the bank, `C * P * k`.
    pub fn slot_count(&self) -> usize {
        self.classes * self.parts * self.anchors
    }
}

/// One (possibly labeled) feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<usize>,
    /// Records produced from the same input by augmentation share a group.
    pub group: u64,
}

impl FeatureVector {
    pub fn labeled(values: Vec<f64>, label: usize, group: u64) -> Self {
        FeatureVector {
            values,
            label: Some(label),
            group,
        }
    }

    pub fn unlabeled(values: Vec<f64>, group: u64) -> Self {
        FeatureVector {
            values,
            label: None,
            group,
        }
    }
}

/// Cut `values` into `P` contiguous subvectors of length `T/P`.
pub fn split<'a, V>(values: &'a [V], config: &TildaConfig) -> Result<Vec<&'a [V]>> {
    config.validate()?;
    if values.len() != config.dim {
        return Err(Error::config(format!(
            "feature vector has {} values, model expects T={}",
            values.len(),
            config.dim
        )));
    }
    Ok(values.chunks_exact(config.part_len()).collect())
}

pub fn join<V: Clone>(parts: &[&[V]]) -> Vec<V> {
    parts.concat()
}

pub(crate) fn check_values(values: &[f64], config: &TildaConfig) -> Result<()> {
    if values.len() != config.dim {
        return Err(Error::config(format!(
            "feature vector has {} values, model expects T={}",
            values.len(),
            config.dim
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("feature {i} is not finite")));
    }
    Ok(())
}

pub(crate) fn check_label(x: &FeatureVector, config: &TildaConfig) -> Result<usize> {
    let c = x
        .label
        .ok_or_else(|| Error::usage("cannot learn from an unlabeled example"))?;
    if c >= config.classes {
        return Err(Error::usage(format!("label {c} is outside 0..{}", config.classes)));
    }
    Ok(c)
}

pub(crate) fn check_group(xs: &[FeatureVector]) -> Result<()> {
    let first = xs
        .first()
        .ok_or_else(|| Error::usage("cannot predict an empty group"))?;
    if xs.iter().any(|x| x.group != first.group) {
        return Err(Error::usage("all versions of a group must share one group id"));
    }
    Ok(())
}
