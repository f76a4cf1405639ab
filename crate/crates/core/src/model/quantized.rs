//! The classifier evaluated with the accelerator's fixed-point datapath.
//!
//! Same algorithm as [`AnchorBank`](super::AnchorBank), but every stage
//! computes in its [`StageFormats`] format:
//!
//! * inputs and anchors: `feature_anchor`
//! * squared distance: `distance`
//! * distance times counter (learning only): `distance_times_counter`
//! * anchor times counter, plus the new subvector: `anchor_times_counter`,
//!   `anchor_plus_feature`
//! * the division by the incremented counter goes through the reciprocal
//!   table back into `feature_anchor`.
//!
//! The distance is always squared Euclidean, whatever the configured metric.
//! Counters saturate at the counter word's maximum; a saturated slot is
//! frozen.

use std::sync::Arc;

use super::bank::combine_versions;
use super::{check_group, check_label, check_values, parallel_vote, FeatureVector, Prediction, TildaConfig};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    fx_add, fx_div_by_counter, fx_mul_count, fx_sq_distance, quantize, Fixed, QFormat, ReciprocalLut, StageFormats,
};

/// Quantize a real vector into raw words of `fmt`.
pub fn quantize_features(values: &[f64], fmt: QFormat) -> Result<Vec<i32>> {
    if fmt.total_bits() > 32 {
        return Err(Error::config(format!("format {fmt} is wider than a 32-bit memory word")));
    }
    values
        .iter()
        .map(|&v| quantize(v, fmt).map(|q| q.raw() as i32))
        .collect()
}

#[derive(Clone, Debug)]
pub struct QuantizedBank {
    config: TildaConfig,
    formats: StageFormats,
    lut: Arc<ReciprocalLut>,
    /// Raw `feature_anchor` words laid out (class, part, slot, dim).
    anchors: Vec<i32>,
    counters: Vec<u32>,
}

impl QuantizedBank {
    pub fn new(config: TildaConfig, formats: StageFormats, lut: Arc<ReciprocalLut>) -> Result<Self> {
        config.validate()?;
        if formats.feature_anchor.total_bits() > 32 || formats.address_counter.total_bits() > 32 {
            return Err(Error::config("memory words are limited to 32 bits"));
        }
        if (lut.depth() as u64) < formats.counter_max() {
            return Err(Error::config(format!(
                "reciprocal table depth {} cannot cover counters up to {}",
                lut.depth(),
                formats.counter_max()
            )));
        }
        Ok(QuantizedBank {
            anchors: vec![0; config.slot_count() * config.part_len()],
            counters: vec![0; config.slot_count()],
            config,
            formats,
            lut,
        })
    }

    pub fn config(&self) -> &TildaConfig {
        &self.config
    }

    pub fn formats(&self) -> &StageFormats {
        &self.formats
    }

    fn slot(&self, class: usize, part: usize, slot: usize) -> usize {
        (class * self.config.parts + part) * self.config.anchors + slot
    }

    pub fn anchor(&self, class: usize, part: usize, slot: usize) -> &[i32] {
        let len = self.config.part_len();
        let start = self.slot(class, part, slot) * len;
        &self.anchors[start..start + len]
    }

    pub fn counter(&self, class: usize, part: usize, slot: usize) -> u32 {
        self.counters[self.slot(class, part, slot)]
    }

    pub fn is_trained(&self) -> bool {
        self.counters.iter().any(|&n| n > 0)
    }

    pub fn quantize(&self, values: &[f64]) -> Result<Vec<i32>> {
        check_values(values, &self.config)?;
        quantize_features(values, self.formats.feature_anchor)
    }

    fn distance(&self, xp: &[i32], anchor: &[i32]) -> Fixed {
        fx_sq_distance(xp, anchor, self.formats.feature_anchor, self.formats.distance)
    }

    /// Slot minimizing the quantized `distance * counter`; lowest index on ties.
    pub fn select_anchor(&self, xp: &[i32], class: usize, part: usize) -> usize {
        (0..self.config.anchors)
            .map(|i| {
                let d = self.distance(xp, self.anchor(class, part, i));
                let weighted = fx_mul_count(
                    d,
                    self.counter(class, part, i) as u64,
                    self.formats.distance_times_counter,
                );
                (weighted.raw(), i)
            })
            .min()
            .map(|(_, i)| i)
            .expect("k >= 1")
    }

    pub fn learn_one(&mut self, x: &FeatureVector) -> Result<Vec<usize>> {
        let q = self.quantize(&x.values)?;
        let class = check_label(x, &self.config)?;
        self.learn_quantized(&q, class)
    }

    /// Learn an already-quantized feature vector of class `class`.
    pub fn learn_quantized(&mut self, q: &[i32], class: usize) -> Result<Vec<usize>> {
        if q.len() != self.config.dim {
            return Err(Error::config("quantized vector length differs from T"));
        }
        if class >= self.config.classes {
            return Err(Error::usage(format!("label {class} is outside 0..{}", self.config.classes)));
        }
        let f = self.formats;
        let len = self.config.part_len();
        let cap = f.counter_max();
        let mut chosen = Vec::with_capacity(self.config.parts);
        for (p, xp) in q.chunks_exact(len).enumerate() {
            let slot = self.select_anchor(xp, class, p);
            chosen.push(slot);
            let idx = self.slot(class, p, slot);
            let n = self.counters[idx] as u64;
            if n >= cap {
                continue;
            }
            for (y, &v) in self.anchors[idx * len..(idx + 1) * len].iter_mut().zip(xp) {
                let prod = fx_mul_count(Fixed::from_raw(*y as i64, f.feature_anchor)?, n, f.anchor_times_counter);
                let sum = fx_add(prod, Fixed::from_raw(v as i64, f.feature_anchor)?, f.anchor_plus_feature);
                *y = fx_div_by_counter(sum, n + 1, &self.lut, f.feature_anchor)?.raw() as i32;
            }
            self.counters[idx] = (n + 1) as u32;
        }
        Ok(chosen)
    }

    /// Class of the nearest nonempty anchor in part `part` (address order
    /// class-major, lowest address wins ties).
    pub fn classify_part(&self, xp: &[i32], part: usize) -> Result<usize> {
        let mut best: Option<(i64, usize)> = None;
        for c in 0..self.config.classes {
            for i in 0..self.config.anchors {
                if self.counter(c, part, i) == 0 {
                    continue;
                }
                let d = self.distance(xp, self.anchor(c, part, i)).raw();
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        best.map(|(_, c)| c)
            .ok_or_else(|| Error::Untrained(format!("part {part} has no trained anchors")))
    }

    pub fn predict_quantized(&self, q: &[i32]) -> Result<Prediction> {
        if !self.is_trained() {
            return Err(Error::Untrained("bank has not learned any example".into()));
        }
        let part_classes = q
            .chunks_exact(self.config.part_len())
            .enumerate()
            .map(|(p, xp)| self.classify_part(xp, p))
            .collect::<Result<Vec<_>>>()?;
        let (final_class, part_tallies) = parallel_vote(&part_classes, self.config.classes)?;
        Ok(Prediction {
            part_classes,
            part_tallies,
            final_class,
            votes_over_versions: None,
        })
    }

    pub fn predict(&self, values: &[f64]) -> Result<Prediction> {
        let q = self.quantize(values)?;
        self.predict_quantized(&q)
    }

    pub fn predict_group(&self, xs: &[FeatureVector]) -> Result<Prediction> {
        check_group(xs)?;
        let per_version = xs
            .iter()
            .map(|x| self.predict(&x.values))
            .collect::<Result<Vec<_>>>()?;
        combine_versions(per_version, self.config.classes)
    }

    /// Dequantized copy of the learned state.
    pub fn to_anchor_bank(&self) -> super::AnchorBank {
        let res = self.formats.feature_anchor.resolution();
        super::AnchorBank::from_parts(
            self.config,
            self.anchors.iter().map(|&a| a as f64 * res).collect(),
            self.counters.iter().map(|&n| n as u64).collect(),
        )
        .expect("shapes match by construction")
    }
}
