//! Training logs and the mean-of-assignments oracle.
//!
//! A bank trained by the incremental rule must hold, in every slot, the
//! plain mean of the subvectors assigned to it and their count. The log
//! carries the subvectors themselves so verification needs no dataset.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{AnchorBank, FeatureVector};

/// One subvector folded into one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub example: u64,
    pub class: usize,
    pub part: usize,
    pub slot: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub assignments: Vec<Assignment>,
}

impl TrainingLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record the slots chosen for one example, cutting it into parts.
    pub fn record(&mut self, example: u64, x: &FeatureVector, slots: &[usize]) {
        let class = x.label.expect("training examples are labeled");
        let len = x.values.len() / slots.len().max(1);
        for (part, (&slot, xp)) in slots.iter().zip(x.values.chunks(len)).enumerate() {
            self.assignments.push(Assignment {
                example,
                class,
                part,
                slot,
                values: xp.to_vec(),
            });
        }
    }

    /// CSV, one assignment per line: `example,class,part,slot,v0,...`.
    /// Values are written with round-trip precision.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w);
        for a in &self.assignments {
            let mut row = vec![a.example.to_string(), a.class.to_string(), a.part.to_string(), a.slot.to_string()];
            row.extend(a.values.iter().map(|v| format!("{v:?}")));
            out.write_record(&row).map_err(|e| Error::format("training log", e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
        let mut assignments = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::format("training log", e.to_string()))?;
            let bad = || Error::format("training log", format!("line {} is malformed", i + 1));
            if row.len() < 5 {
                return Err(bad());
            }
            let int = |j: usize| row[j].trim().parse::<u64>().map_err(|_| bad());
            assignments.push(Assignment {
                example: int(0)?,
                class: int(1)? as usize,
                part: int(2)? as usize,
                slot: int(3)? as usize,
                values: row
                    .iter()
                    .skip(4)
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?,
            });
        }
        Ok(TrainingLog { assignments })
    }
}

/// Result of checking a bank against its training log.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    /// Largest anchor error over all slots, relative to the slot's scale
    /// (the larger of the mean's and the inputs' largest magnitude).
    pub max_relative_error: f64,
    /// Per-slot relative error, keyed by (class, part, slot).
    pub slot_errors: BTreeMap<(usize, usize, usize), f64>,
    /// Slots whose counter disagrees with the number of assignments:
    /// (class, part, slot, counter, assignments).
    pub counter_mismatches: Vec<(usize, usize, usize, u64, u64)>,
}

impl ReplayReport {
    /// Slots failing either check at tolerance `tol`.
    pub fn offenders(&self, tol: f64) -> Vec<(usize, usize, usize)> {
        let mut out: Vec<_> = self
            .slot_errors
            .iter()
            .filter(|(_, &e)| !(e <= tol))
            .map(|(&k, _)| k)
            .chain(self.counter_mismatches.iter().map(|&(c, p, s, _, _)| (c, p, s)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.offenders(tol).is_empty()
    }
}

pub fn replay_verify(bank: &AnchorBank, log: &TrainingLog) -> Result<ReplayReport> {
    let cfg = bank.config();
    let len = cfg.part_len();
    let mut sums: BTreeMap<(usize, usize, usize), (Vec<f64>, f64, u64)> = BTreeMap::new();
    for a in &log.assignments {
        if a.class >= cfg.classes || a.part >= cfg.parts || a.slot >= cfg.anchors || a.values.len() != len {
            return Err(Error::usage(format!(
                "log entry for example {} (class {}, part {}, slot {}, {} values) does not fit the bank",
                a.example,
                a.class,
                a.part,
                a.slot,
                a.values.len()
            )));
        }
        let e = sums.entry((a.class, a.part, a.slot)).or_insert_with(|| (vec![0.0; len], 0.0, 0));
        for (s, &v) in e.0.iter_mut().zip(&a.values) {
            *s += v;
            e.1 = e.1.max(v.abs());
        }
        e.2 += 1;
    }

    let mut report = ReplayReport {
        max_relative_error: 0.0,
        slot_errors: BTreeMap::new(),
        counter_mismatches: Vec::new(),
    };
    for c in 0..cfg.classes {
        for p in 0..cfg.parts {
            for s in 0..cfg.anchors {
                let n = bank.counter(c, p, s);
                let Some((sum, in_scale, count)) = sums.get(&(c, p, s)) else {
                    if n != 0 {
                        report.counter_mismatches.push((c, p, s, n, 0));
                    }
                    continue;
                };
                if n != *count {
                    report.counter_mismatches.push((c, p, s, n, *count));
                }
                let mean: Vec<f64> = sum.iter().map(|v| v / *count as f64).collect();
                let scale = mean.iter().fold(*in_scale, |m, v| m.max(v.abs()));
                let abs = mean
                    .iter()
                    .zip(bank.anchor(c, p, s))
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let rel = if scale > 0.0 { abs / scale } else { abs };
                report.max_relative_error = report.max_relative_error.max(rel);
                report.slot_errors.insert((c, p, s), rel);
            }
        }
    }
    Ok(report)
}
