use std::io::{Read, Write};

use serde::Serialize;

use super::{check_group, check_label, check_values, parallel_vote, sequential_vote, split, tally};
use super::{FeatureVector, Metric, TildaConfig};
use crate::error::{Error, Result};

/// Outcome of classifying one feature vector or one augmentation group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Prediction {
    /// Per-part decisions. For a group these belong to its first version.
    pub part_classes: Vec<usize>,
    pub part_tallies: Vec<u32>,
    pub final_class: usize,
    /// Tally of the per-version decisions; present only for groups of two or more.
    pub votes_over_versions: Option<Vec<u32>>,
}

/// Fold per-version predictions with the second majority vote.
pub(crate) fn combine_versions(mut per_version: Vec<Prediction>, classes: usize) -> Result<Prediction> {
    if per_version.len() == 1 {
        return Ok(per_version.pop().expect("one element"));
    }
    let decisions: Vec<usize> = per_version.iter().map(|p| p.final_class).collect();
    let final_class = sequential_vote(&decisions, classes)?;
    let votes = tally(&decisions, classes)?;
    let first = per_version.swap_remove(0);
    Ok(Prediction {
        part_classes: first.part_classes,
        part_tallies: first.part_tallies,
        final_class,
        votes_over_versions: Some(votes),
    })
}

/// Learned state: anchor means and counters for every (class, part, slot).
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorBank {
    config: TildaConfig,
    /// Laid out (class, part, slot, dim).
    anchors: Vec<f64>,
    /// Laid out (class, part, slot).
    counters: Vec<u64>,
}

impl AnchorBank {
    pub const MAGIC: &'static [u8; 4] = b"TLDB";
    pub const VERSION: u32 = 1;

    pub fn new(config: TildaConfig) -> Result<Self> {
        config.validate()?;
        Ok(AnchorBank {
            anchors: vec![0.0; config.slot_count() * config.part_len()],
            counters: vec![0; config.slot_count()],
            config,
        })
    }

    /// Assemble a bank from raw arrays in (class, part, slot[, dim]) order.
    pub fn from_parts(config: TildaConfig, anchors: Vec<f64>, counters: Vec<u64>) -> Result<Self> {
        config.validate()?;
        if counters.len() != config.slot_count() || anchors.len() != config.slot_count() * config.part_len() {
            return Err(Error::config("anchor or counter array does not match the configuration"));
        }
        Ok(AnchorBank {
            config,
            anchors,
            counters,
        })
    }

    pub fn config(&self) -> &TildaConfig {
        &self.config
    }

    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    fn slot(&self, class: usize, part: usize, slot: usize) -> usize {
        (class * self.config.parts + part) * self.config.anchors + slot
    }

    pub fn anchor(&self, class: usize, part: usize, slot: usize) -> &[f64] {
        let len = self.config.part_len();
        let start = self.slot(class, part, slot) * len;
        &self.anchors[start..start + len]
    }

    pub fn counter(&self, class: usize, part: usize, slot: usize) -> u64 {
        self.counters[self.slot(class, part, slot)]
    }

    /// True once any example has been learned.
    pub fn is_trained(&self) -> bool {
        self.counters.iter().any(|&n| n > 0)
    }

    /// Slot whose `distance * counter` is smallest; lowest index on ties.
    pub fn select_anchor(&self, xp: &[f64], class: usize, part: usize) -> usize {
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for i in 0..self.config.anchors {
            let n = self.counter(class, part, i);
            let score = if n == 0 {
                0.0
            } else {
                self.config.metric.distance(xp, self.anchor(class, part, i)) * n as f64
            };
            if score < best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    /// Fold one labeled example into the bank. Returns the slot chosen in
    /// each part.
    pub fn learn_one(&mut self, x: &FeatureVector) -> Result<Vec<usize>> {
        check_values(&x.values, &self.config)?;
        let class = check_label(x, &self.config)?;
        let len = self.config.part_len();
        let mut chosen = Vec::with_capacity(self.config.parts);
        for (p, xp) in x.values.chunks_exact(len).enumerate() {
            let slot = self.select_anchor(xp, class, p);
            let idx = self.slot(class, p, slot);
            let n = self.counters[idx];
            let weight = n as f64;
            let next = (n + 1) as f64;
            for (y, &v) in self.anchors[idx * len..(idx + 1) * len].iter_mut().zip(xp) {
                *y = (*y * weight + v) / next;
            }
            self.counters[idx] = n + 1;
            chosen.push(slot);
        }
        Ok(chosen)
    }

    /// Learn every example of `stream` in order, consuming it one item at a
    /// time. `observe` sees each example with its chosen slots before the
    /// example is dropped. Returns the number of examples learned.
    pub fn learn_stream<I, F>(&mut self, stream: I, mut observe: F) -> Result<u64>
    where
        I: IntoIterator<Item = FeatureVector>,
        F: FnMut(&FeatureVector, &[usize]),
    {
        let mut seen = 0;
        for x in stream {
            let slots = self.learn_one(&x)?;
            observe(&x, &slots);
            seen += 1;
        }
        Ok(seen)
    }

    /// Class of the nearest nonempty anchor in part `part`.
    pub fn classify_part(&self, xp: &[f64], part: usize) -> Result<usize> {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..self.config.classes {
            for i in 0..self.config.anchors {
                if self.counter(c, part, i) == 0 {
                    continue;
                }
                let d = self.config.metric.distance(xp, self.anchor(c, part, i));
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, c));
                }
            }
        }
        best.map(|(_, c)| c)
            .ok_or_else(|| Error::Untrained(format!("part {part} has no trained anchors")))
    }

    pub fn predict(&self, values: &[f64]) -> Result<Prediction> {
        check_values(values, &self.config)?;
        if !self.is_trained() {
            return Err(Error::Untrained("bank has not learned any example".into()));
        }
        let part_classes = split(values, &self.config)?
            .into_iter()
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

    /// Predict every version of one augmentation group and combine the
    /// decisions by a second majority vote.
    pub fn predict_group(&self, xs: &[FeatureVector]) -> Result<Prediction> {
        check_group(xs)?;
        let per_version = xs
            .iter()
            .map(|x| self.predict(&x.values))
            .collect::<Result<Vec<_>>>()?;
        combine_versions(per_version, self.config.classes)
    }

    /// Serialize in the `TLDB` layout: magic, version, T, P, C, k as u32,
    /// anchors as f64, counters as u64, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        let mut buf = Vec::with_capacity(24 + self.anchors.len() * 8 + self.counters.len() * 8);
        buf.extend_from_slice(Self::MAGIC);
        for v in [Self::VERSION as usize, c.dim, c.parts, c.classes, c.anchors] {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for a in &self.anchors {
            buf.extend_from_slice(&a.to_le_bytes());
        }
        for n in &self.counters {
            buf.extend_from_slice(&n.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Inverse of [`AnchorBank::write_to`]. The file carries neither `R`
    /// nor the metric; the bank comes back with `R = 1` and the default
    /// metric, neither of which affects classification.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 24];
        r.read_exact(&mut head)?;
        if &head[..4] != Self::MAGIC {
            return Err(Error::format("anchor bank", "bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(head[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        if word(0) as u32 != Self::VERSION {
            return Err(Error::format("anchor bank", format!("unsupported version {}", word(0))));
        }
        let config = TildaConfig::new(word(1), word(2), word(3), word(4), 1)
            .map_err(|e| Error::format("anchor bank", e.to_string()))?
            .with_metric(Metric::default());
        let mut bytes = vec![0u8; config.slot_count() * (config.part_len() + 1) * 8];
        r.read_exact(&mut bytes)?;
        let (a, n) = bytes.split_at(config.slot_count() * config.part_len() * 8);
        let anchors = a
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let counters = n
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_parts(config, anchors, counters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dim: usize, parts: usize, classes: usize, anchors: usize) -> TildaConfig {
        TildaConfig::new(dim, parts, classes, anchors, 1).unwrap()
    }

    #[test]
    fn fresh_bank_selects_slot_zero() {
        let bank = AnchorBank::new(cfg(4, 2, 3, 5)).unwrap();
        assert_eq!(bank.select_anchor(&[9.0, -1.0], 2, 1), 0);
        assert!(bank.anchors().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn equal_counters_reduce_to_nearest() {
        let c = cfg(1, 1, 1, 2);
        let bank = AnchorBank::from_parts(c, vec![1.0, 5.0], vec![1, 1]).unwrap();
        assert_eq!(bank.select_anchor(&[1.5], 0, 0), 0);
        assert_eq!(bank.select_anchor(&[4.0], 0, 0), 1);
    }

    #[test]
    fn counter_weight_prefers_light_slot() {
        let c = cfg(1, 1, 1, 2);
        // d0 * 10 = 10 vs d1 * 1 = 3
        let bank = AnchorBank::from_parts(c, vec![1.0, 5.0], vec![10, 1]).unwrap();
        assert_eq!(bank.select_anchor(&[2.0], 0, 0), 1);
    }

    #[test]
    fn learn_into_fresh_bank() {
        let mut bank = AnchorBank::new(cfg(4, 2, 3, 2)).unwrap();
        let slots = bank
            .learn_one(&FeatureVector::labeled(vec![1.0, 2.0, 3.0, 4.0], 1, 0))
            .unwrap();
        assert_eq!(slots, vec![0, 0]);
        assert_eq!(bank.anchor(1, 0, 0), &[1.0, 2.0]);
        assert_eq!(bank.anchor(1, 1, 0), &[3.0, 4.0]);
        assert_eq!(bank.counter(1, 0, 0), 1);
        assert_eq!(bank.counter(1, 1, 0), 1);
        assert_eq!(bank.counters().iter().sum::<u64>(), 2);
    }

    #[test]
    fn barycenter_update() {
        let c = cfg(1, 1, 1, 1);
        let mut bank = AnchorBank::from_parts(c, vec![2.0], vec![1]).unwrap();
        bank.learn_one(&FeatureVector::labeled(vec![4.0], 0, 0)).unwrap();
        assert_eq!(bank.anchor(0, 0, 0), &[3.0]);
        assert_eq!(bank.counter(0, 0, 0), 2);
    }

    #[test]
    fn learn_rejects_bad_input() {
        let mut bank = AnchorBank::new(cfg(2, 1, 2, 1)).unwrap();
        assert!(matches!(
            bank.learn_one(&FeatureVector::unlabeled(vec![0.0, 1.0], 0)),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            bank.learn_one(&FeatureVector::labeled(vec![0.0, 1.0], 2, 0)),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            bank.learn_one(&FeatureVector::labeled(vec![0.0], 0, 0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            bank.learn_one(&FeatureVector::labeled(vec![0.0, f64::NAN], 0, 0)),
            Err(Error::Numeric(_))
        ));
        assert!(!bank.is_trained());
    }

    #[test]
    fn classify_part_examples() {
        let c = cfg(2, 1, 3, 2);
        let mut counters = vec![0; 6];
        counters[2 * 2 + 1] = 4;
        let mut anchors = vec![0.0; 12];
        anchors[(2 * 2 + 1) * 2] = 7.0;
        let bank = AnchorBank::from_parts(c, anchors.clone(), counters.clone()).unwrap();
        // Empty slots sit at the origin but never win.
        assert_eq!(bank.classify_part(&[0.0, 0.0], 0).unwrap(), 2);

        counters[0] = 1;
        anchors[0] = 1.0;
        anchors[1] = 1.0;
        let bank = AnchorBank::from_parts(c, anchors, counters).unwrap();
        assert_eq!(bank.classify_part(&[1.0, 1.0], 0).unwrap(), 0);
        assert_eq!(bank.classify_part(&[6.0, 0.0], 0).unwrap(), 2);
    }

    #[test]
    fn classify_ties_go_to_lowest_class() {
        let c = cfg(1, 1, 3, 1);
        let bank = AnchorBank::from_parts(c, vec![0.0, -1.0, 1.0], vec![0, 1, 1]).unwrap();
        assert_eq!(bank.classify_part(&[0.0], 0).unwrap(), 1);
    }

    #[test]
    fn untrained_errors() {
        let bank = AnchorBank::new(cfg(2, 1, 2, 1)).unwrap();
        assert!(matches!(bank.classify_part(&[0.0, 0.0], 0), Err(Error::Untrained(_))));
        assert!(matches!(bank.predict(&[0.0, 0.0]), Err(Error::Untrained(_))));
    }

    #[test]
    fn predict_memorized_example() {
        let mut bank = AnchorBank::new(cfg(6, 3, 4, 2)).unwrap();
        let x = FeatureVector::labeled(vec![0.3, -1.0, 2.0, 0.0, 1.5, -0.7], 3, 0);
        bank.learn_one(&x).unwrap();
        bank.learn_one(&FeatureVector::labeled(vec![5.0; 6], 1, 1)).unwrap();
        let p = bank.predict(&x.values).unwrap();
        assert_eq!(p.final_class, 3);
        assert_eq!(p.part_classes, vec![3, 3, 3]);
        assert_eq!(p.part_tallies, vec![0, 0, 0, 3]);
        assert!(p.votes_over_versions.is_none());
    }

    #[test]
    fn single_class_always_zero() {
        let mut bank = AnchorBank::new(cfg(2, 2, 1, 1)).unwrap();
        bank.learn_one(&FeatureVector::labeled(vec![1.0, 1.0], 0, 0)).unwrap();
        for v in [[-5.0, 3.0], [100.0, 0.0]] {
            assert_eq!(bank.predict(&v).unwrap().final_class, 0);
        }
    }

    #[test]
    fn predict_group_examples() {
        let mut bank = AnchorBank::new(cfg(2, 1, 3, 1)).unwrap();
        for (c, v) in [(0, 0.0), (1, 10.0), (2, 20.0)] {
            bank.learn_one(&FeatureVector::labeled(vec![v, v], c, c as u64)).unwrap();
        }
        let one = [FeatureVector::unlabeled(vec![9.0, 9.0], 7)];
        assert_eq!(bank.predict_group(&one).unwrap(), bank.predict(&one[0].values).unwrap());

        let group: Vec<_> = [1.0, 19.0, 21.0]
            .iter()
            .map(|&v| FeatureVector::unlabeled(vec![v, v], 7))
            .collect();
        let p = bank.predict_group(&group).unwrap();
        assert_eq!(p.final_class, 2);
        assert_eq!(p.votes_over_versions, Some(vec![1, 0, 2]));
        assert_eq!(p.part_classes, vec![0]);

        assert!(matches!(bank.predict_group(&[]), Err(Error::Usage(_))));
        let mixed = [
            FeatureVector::unlabeled(vec![0.0, 0.0], 1),
            FeatureVector::unlabeled(vec![0.0, 0.0], 2),
        ];
        assert!(matches!(bank.predict_group(&mixed), Err(Error::Usage(_))));
    }

    #[test]
    fn tldb_layout() {
        let c = cfg(2, 1, 1, 2);
        let bank = AnchorBank::from_parts(c, vec![1.0, 2.0, 0.0, 0.0], vec![3, 0]).unwrap();
        let mut bytes = Vec::new();
        bank.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"TLDB");
        let words: Vec<u32> = bytes[4..24]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(words, vec![1, 2, 1, 1, 2]);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 1.0);
        assert_eq!(u64::from_le_bytes(bytes[56..64].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 24 + 4 * 8 + 2 * 8);
        assert_eq!(AnchorBank::read_from(&bytes[..]).unwrap(), bank);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(AnchorBank::read_from(&bad[..]).is_err());
        assert!(AnchorBank::read_from(&bytes[..40]).is_err());
    }
}
