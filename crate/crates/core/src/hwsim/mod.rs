//! Cycle-stepped model of the incremental-learning accelerator.
//!
//! `P` processing blocks share one address stream from the counter/L-P
//! address generator. Each block owns its slice of the anchor memory (rows
//! addressed `class * k + slot`) and a counter memory. Per cycle a block
//! reads one row, computes its squared distance to the input subvector and
//! folds it into the running minimum held in the compare register.
//!
//! Learning (`LpMode::Learn`) scans the `k` rows of the example's class,
//! then spends one cycle each on anchor * counter, + subvector (with the
//! counter increment) and the reciprocal-table division: `k + 3` cycles.
//! Classification (`LpMode::Process`) scans all `C * k` rows per version;
//! the parallel and sequential votes run alongside the scan, so a group of
//! `R` versions takes `C * k * R` cycles.

mod report;
mod snapshot;

pub use snapshot::{MAGIC as SNAPSHOT_MAGIC, VERSION as SNAPSHOT_VERSION};
pub use report::{
    classify_cycles, learn_cycles, resource_report, resource_report_with, timing_report, CycleReport, ResourceReport,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fixedpoint::{
    fx_add, fx_div_by_counter, fx_mul_count, fx_sq_distance, Fixed, ReciprocalLut, StageFormats,
};
use crate::model::{argmax_lowest, parallel_vote, AnchorBank, TildaConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpMode {
    Learn,
    Process,
}

/// The counter/L-P block: counts `0..modulo_in`, and an adder places the
/// count at the example's class row during learning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressGenerator {
    modulo_in: usize,
    current: usize,
    lp: LpMode,
    class_offset: usize,
}

impl AddressGenerator {
    fn new() -> Self {
        AddressGenerator {
            modulo_in: 1,
            current: 0,
            lp: LpMode::Learn,
            class_offset: 0,
        }
    }

    pub fn modulo_in(&self) -> usize {
        self.modulo_in
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn lp(&self) -> LpMode {
        self.lp
    }

    /// Address presented to the memories.
    pub fn address(&self) -> usize {
        self.class_offset + self.current
    }

    fn configure(&mut self, lp: LpMode, modulo_in: usize, class_offset: usize) {
        self.lp = lp;
        self.modulo_in = modulo_in;
        self.class_offset = class_offset;
        self.current = 0;
    }

    fn is_last(&self) -> bool {
        self.current + 1 == self.modulo_in
    }

    fn tick(&mut self) {
        self.current = (self.current + 1) % self.modulo_in;
    }
}

/// Registers and memories of one processing block.
#[derive(Clone, Debug)]
pub struct ProcessingBlock {
    row_len: usize,
    anchor_memory: Vec<i32>,
    counter_memory: Vec<u32>,
    input_reg: Vec<i32>,
    distance_reg: Fixed,
    /// Smallest compared value so far (`r_p`); `None` before the first valid compare.
    best_distance: Option<Fixed>,
    best_index_reg: usize,
    val_flag: bool,
    /// High while reading, low during the write-back cycles of learning.
    write_read: bool,
    update_reg: Vec<Fixed>,
    frozen: bool,
}

impl ProcessingBlock {
    fn new(rows: usize, row_len: usize, formats: &StageFormats) -> Self {
        ProcessingBlock {
            row_len,
            anchor_memory: vec![0; rows * row_len],
            counter_memory: vec![0; rows],
            input_reg: vec![0; row_len],
            distance_reg: Fixed::zero(formats.distance),
            best_distance: None,
            best_index_reg: 0,
            val_flag: false,
            write_read: true,
            update_reg: vec![Fixed::zero(formats.anchor_plus_feature); row_len],
            frozen: false,
        }
    }

    pub fn anchor_row(&self, address: usize) -> &[i32] {
        &self.anchor_memory[address * self.row_len..(address + 1) * self.row_len]
    }

    fn anchor_row_mut(&mut self, address: usize) -> &mut [i32] {
        &mut self.anchor_memory[address * self.row_len..(address + 1) * self.row_len]
    }

    pub fn counter(&self, address: usize) -> u32 {
        self.counter_memory[address]
    }

    pub fn counters(&self) -> &[u32] {
        &self.counter_memory
    }

    pub fn distance_reg(&self) -> Fixed {
        self.distance_reg
    }

    pub fn best_distance(&self) -> Option<Fixed> {
        self.best_distance
    }

    pub fn best_index_reg(&self) -> usize {
        self.best_index_reg
    }

    pub fn val_flag(&self) -> bool {
        self.val_flag
    }

    pub fn write_read(&self) -> bool {
        self.write_read
    }

    fn reset_compare(&mut self) {
        self.best_distance = None;
        self.best_index_reg = 0;
    }

    fn compute_distance(&mut self, address: usize, f: &StageFormats) -> Fixed {
        let d = fx_sq_distance(&self.input_reg, self.anchor_row(address), f.feature_anchor, f.distance);
        self.distance_reg = d;
        d
    }

    fn compare(&mut self, value: Fixed, address: usize) {
        if self.best_distance.is_none_or(|b| value.raw() < b.raw()) {
            self.best_distance = Some(value);
            self.best_index_reg = address;
        }
    }

    /// One learning scan beat: distance, weight by counter, compare.
    fn scan_learn(&mut self, address: usize, f: &StageFormats) {
        let d = self.compute_distance(address, f);
        let weighted = fx_mul_count(d, self.counter_memory[address] as u64, f.distance_times_counter);
        self.compare(weighted, address);
    }

    /// One classification scan beat. Rows with a zero counter do not enable
    /// the compare.
    fn scan_process(&mut self, address: usize, f: &StageFormats) {
        let d = self.compute_distance(address, f);
        if self.counter_memory[address] != 0 {
            self.compare(d, address);
        }
    }
}

/// Result of one clock cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Busy,
    /// The learn transaction wrote back its update on this cycle.
    Learned,
    /// The classify transaction produced its final class on this cycle.
    Classified(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LearnPhase {
    Scan,
    Multiply,
    Add,
    Divide,
}

#[derive(Clone, Debug)]
enum Transaction {
    Learn {
        phase: LearnPhase,
    },
    Classify {
        versions: Vec<Vec<i32>>,
        version: usize,
    },
}

/// One line of the cycle trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub cycle: u64,
    pub block: usize,
    pub address: usize,
    pub distance_raw: i64,
    pub best_index: usize,
    pub val: bool,
}

impl TraceRecord {
    pub const HEADER: &'static str = "cycle block address distance_raw best_index val";
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.cycle, self.block, self.address, self.distance_raw, self.best_index, self.val as u8
        )
    }
}

/// Render a trace with its header line, one record per line.
pub fn render_trace(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(TraceRecord::HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug)]
pub struct SimMachine {
    config: TildaConfig,
    formats: StageFormats,
    lut: Arc<ReciprocalLut>,
    blocks: Vec<ProcessingBlock>,
    addr_gen: AddressGenerator,
    lp_mode: LpMode,
    cycle_count: u64,
    txn: Option<Transaction>,
    /// Accumulators of the sequential majority vote.
    sequential_reg: Vec<u32>,
    /// Output of the parallel majority vote for the last finished version.
    parallel_out: Option<(usize, Vec<u32>)>,
    trace: Option<Vec<TraceRecord>>,
}

impl SimMachine {
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
        let rows = config.classes * config.anchors;
        Ok(SimMachine {
            blocks: (0..config.parts)
                .map(|_| ProcessingBlock::new(rows, config.part_len(), &formats))
                .collect(),
            addr_gen: AddressGenerator::new(),
            lp_mode: LpMode::Learn,
            cycle_count: 0,
            txn: None,
            sequential_reg: vec![0; config.classes],
            parallel_out: None,
            trace: None,
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

    pub fn lut(&self) -> &Arc<ReciprocalLut> {
        &self.lut
    }

    pub fn blocks(&self) -> &[ProcessingBlock] {
        &self.blocks
    }

    pub fn address_generator(&self) -> &AddressGenerator {
        &self.addr_gen
    }

    pub fn lp_mode(&self) -> LpMode {
        self.lp_mode
    }

    pub fn cycle_count(&self) -> u64 {
        self.cycle_count
    }

    pub fn is_idle(&self) -> bool {
        self.txn.is_none()
    }

    pub fn sequential_register(&self) -> &[u32] {
        &self.sequential_reg
    }

    /// Class and tallies from the parallel vote of the most recent version.
    pub fn parallel_output(&self) -> Option<(usize, &[u32])> {
        self.parallel_out.as_ref().map(|(c, t)| (*c, t.as_slice()))
    }

    /// Start recording one [`TraceRecord`] per block per cycle.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    /// Drain the records collected so far.
    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Drive the L-P signal. Only allowed between transactions.
    pub fn set_mode(&mut self, mode: LpMode) -> Result<()> {
        if self.txn.is_some() {
            return Err(Error::Protocol("cannot switch L-P mode mid-transaction".into()));
        }
        self.lp_mode = mode;
        Ok(())
    }

    /// True when every block holds at least one learned anchor.
    pub fn is_trained(&self) -> bool {
        self.blocks.iter().all(|b| b.counter_memory.iter().any(|&n| n > 0))
    }

    fn check_input(&self, features: &[i32]) -> Result<()> {
        if features.len() != self.config.dim {
            return Err(Error::config(format!(
                "input has {} words, machine expects T={}",
                features.len(),
                self.config.dim
            )));
        }
        let fa = self.formats.feature_anchor;
        if let Some(v) = features.iter().find(|&&v| !fa.contains_raw(v as i64)) {
            return Err(Error::Numeric(format!("input word {v} does not fit {fa}")));
        }
        Ok(())
    }

    fn load_input(&mut self, features: &[i32]) {
        for (block, part) in self.blocks.iter_mut().zip(features.chunks_exact(self.config.part_len())) {
            block.input_reg.copy_from_slice(part);
        }
    }

    /// Latch a quantized feature vector of class `class` and start a learn
    /// transaction.
    pub fn begin_learn(&mut self, features: &[i32], class: usize) -> Result<()> {
        if self.txn.is_some() {
            return Err(Error::Protocol("a transaction is already in flight".into()));
        }
        if self.lp_mode != LpMode::Learn {
            return Err(Error::Protocol("learning requires L-P = learn".into()));
        }
        self.check_input(features)?;
        if class >= self.config.classes {
            return Err(Error::usage(format!("label {class} is outside 0..{}", self.config.classes)));
        }
        self.load_input(features);
        for b in &mut self.blocks {
            b.reset_compare();
            b.write_read = true;
        }
        let k = self.config.anchors;
        self.addr_gen.configure(LpMode::Learn, k, class * k);
        self.txn = Some(Transaction::Learn {
            phase: LearnPhase::Scan,
        });
        Ok(())
    }

    /// Latch the `R` quantized versions of one input and start a classify
    /// transaction.
    pub fn begin_classify<V: AsRef<[i32]>>(&mut self, versions: &[V]) -> Result<()> {
        if self.txn.is_some() {
            return Err(Error::Protocol("a transaction is already in flight".into()));
        }
        if self.lp_mode != LpMode::Process {
            return Err(Error::Protocol("classification requires L-P = process".into()));
        }
        if versions.is_empty() {
            return Err(Error::usage("cannot classify an empty group"));
        }
        for v in versions {
            self.check_input(v.as_ref())?;
        }
        if !self.is_trained() {
            return Err(Error::Untrained("some processing block has no learned anchors".into()));
        }
        let versions: Vec<Vec<i32>> = versions.iter().map(|v| v.as_ref().to_vec()).collect();
        self.load_input(&versions[0]);
        for b in &mut self.blocks {
            b.reset_compare();
        }
        self.sequential_reg.iter_mut().for_each(|r| *r = 0);
        self.parallel_out = None;
        self.addr_gen
            .configure(LpMode::Process, self.config.classes * self.config.anchors, 0);
        self.txn = Some(Transaction::Classify { versions, version: 0 });
        Ok(())
    }

    fn record(&mut self, address: usize) {
        if let Some(trace) = self.trace.as_mut() {
            for (i, b) in self.blocks.iter().enumerate() {
                trace.push(TraceRecord {
                    cycle: self.cycle_count,
                    block: i,
                    address,
                    distance_raw: b.distance_reg.raw(),
                    best_index: b.best_index_reg,
                    val: b.val_flag,
                });
            }
        }
    }

    /// Advance one clock cycle.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let txn = self
            .txn
            .take()
            .ok_or_else(|| Error::Protocol("step on an idle machine".into()))?;
        self.cycle_count += 1;
        for b in &mut self.blocks {
            b.val_flag = false;
        }
        let f = self.formats;
        match txn {
            Transaction::Learn { phase } => {
                let next = match phase {
                    LearnPhase::Scan => {
                        let address = self.addr_gen.address();
                        let last = self.addr_gen.is_last();
                        for b in &mut self.blocks {
                            b.scan_learn(address, &f);
                            b.val_flag = last;
                        }
                        self.record(address);
                        self.addr_gen.tick();
                        if last {
                            LearnPhase::Multiply
                        } else {
                            LearnPhase::Scan
                        }
                    }
                    LearnPhase::Multiply => {
                        let cap = f.counter_max();
                        for b in &mut self.blocks {
                            b.write_read = false;
                            let idx = b.best_index_reg;
                            let n = b.counter_memory[idx] as u64;
                            b.frozen = n >= cap;
                            for j in 0..b.row_len {
                                let y = Fixed::from_raw(b.anchor_row(idx)[j] as i64, f.feature_anchor)?;
                                b.update_reg[j] = fx_mul_count(y, n, f.anchor_times_counter);
                            }
                        }
                        self.record_writeback();
                        LearnPhase::Add
                    }
                    LearnPhase::Add => {
                        for b in &mut self.blocks {
                            for j in 0..b.row_len {
                                let x = Fixed::from_raw(b.input_reg[j] as i64, f.feature_anchor)?;
                                b.update_reg[j] = fx_add(b.update_reg[j], x, f.anchor_plus_feature);
                            }
                            if !b.frozen {
                                b.counter_memory[b.best_index_reg] += 1;
                            }
                        }
                        self.record_writeback();
                        LearnPhase::Divide
                    }
                    LearnPhase::Divide => {
                        let lut = Arc::clone(&self.lut);
                        for b in &mut self.blocks {
                            let idx = b.best_index_reg;
                            if !b.frozen {
                                let n = b.counter_memory[idx] as u64;
                                let row: Vec<i32> = b
                                    .update_reg
                                    .iter()
                                    .map(|&s| fx_div_by_counter(s, n, &lut, f.feature_anchor).map(|v| v.raw() as i32))
                                    .collect::<Result<_>>()?;
                                b.anchor_row_mut(idx).copy_from_slice(&row);
                            }
                            b.write_read = true;
                        }
                        self.record_writeback();
                        return Ok(StepOutcome::Learned);
                    }
                };
                self.txn = Some(Transaction::Learn { phase: next });
                Ok(StepOutcome::Busy)
            }
            Transaction::Classify { versions, mut version } => {
                let address = self.addr_gen.address();
                let last = self.addr_gen.is_last();
                for b in &mut self.blocks {
                    b.scan_process(address, &f);
                    b.val_flag = last;
                }
                self.record(address);
                self.addr_gen.tick();
                if !last {
                    self.txn = Some(Transaction::Classify { versions, version });
                    return Ok(StepOutcome::Busy);
                }
                let k = self.config.anchors;
                let part_classes = self
                    .blocks
                    .iter()
                    .map(|b| {
                        b.best_distance
                            .map(|_| b.best_index_reg / k)
                            .ok_or_else(|| Error::Untrained("processing block found no learned anchor".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (class, tallies) = parallel_vote(&part_classes, self.config.classes)?;
                self.sequential_reg[class] += 1;
                self.parallel_out = Some((class, tallies));
                version += 1;
                if version == versions.len() {
                    return Ok(StepOutcome::Classified(argmax_lowest(&self.sequential_reg)));
                }
                self.load_input(&versions[version]);
                for b in &mut self.blocks {
                    b.reset_compare();
                }
                self.txn = Some(Transaction::Classify { versions, version });
                Ok(StepOutcome::Busy)
            }
        }
    }

    fn record_writeback(&mut self) {
        if self.trace.is_some() {
            let address = self.blocks.first().map_or(0, |b| b.best_index_reg);
            self.record(address);
        }
    }

    /// Slot chosen in each block by the most recent learn transaction.
    pub fn last_selection(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|b| b.best_index_reg % self.config.anchors)
            .collect()
    }

    /// Learn one quantized feature vector; returns the cycles consumed.
    pub fn sim_learn(&mut self, features: &[i32], class: usize) -> Result<u64> {
        let start = self.cycle_count;
        self.begin_learn(features, class)?;
        while self.step()? != StepOutcome::Learned {}
        Ok(self.cycle_count - start)
    }

    /// Classify the quantized versions of one input; returns the final class
    /// and the cycles consumed.
    pub fn sim_classify<V: AsRef<[i32]>>(&mut self, versions: &[V]) -> Result<(usize, u64)> {
        let start = self.cycle_count;
        self.begin_classify(versions)?;
        loop {
            if let StepOutcome::Classified(c) = self.step()? {
                return Ok((c, self.cycle_count - start));
            }
        }
    }

    /// Dequantized copy of the block memories as an anchor bank.
    pub fn to_anchor_bank(&self) -> AnchorBank {
        let cfg = &self.config;
        let res = self.formats.feature_anchor.resolution();
        let mut anchors = Vec::with_capacity(cfg.slot_count() * cfg.part_len());
        let mut counters = Vec::with_capacity(cfg.slot_count());
        for c in 0..cfg.classes {
            for b in &self.blocks {
                for slot in 0..cfg.anchors {
                    let addr = c * cfg.anchors + slot;
                    anchors.extend(b.anchor_row(addr).iter().map(|&r| r as f64 * res));
                    counters.push(b.counter(addr) as u64);
                }
            }
        }
        AnchorBank::from_parts(*cfg, anchors, counters).expect("shapes match by construction")
    }

    /// Load block memories from an anchor bank whose values lie on the
    /// `feature_anchor` grid.
    pub fn load_anchor_bank(&mut self, bank: &AnchorBank) -> Result<()> {
        let cfg = self.config;
        let b_cfg = bank.config();
        if (b_cfg.dim, b_cfg.parts, b_cfg.classes, b_cfg.anchors) != (cfg.dim, cfg.parts, cfg.classes, cfg.anchors) {
            return Err(Error::config("anchor bank shape differs from the machine"));
        }
        let fa = self.formats.feature_anchor;
        let cap = self.formats.counter_max();
        for c in 0..cfg.classes {
            for (p, block) in self.blocks.iter_mut().enumerate() {
                for slot in 0..cfg.anchors {
                    let addr = c * cfg.anchors + slot;
                    let n = bank.counter(c, p, slot);
                    if n > cap {
                        return Err(Error::config(format!("counter {n} exceeds the counter word")));
                    }
                    block.counter_memory[addr] = n as u32;
                    let row = crate::model::quantize_features(bank.anchor(c, p, slot), fa)?;
                    block.anchor_row_mut(addr).copy_from_slice(&row);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{quantize_features, FeatureVector, QuantizedBank};

    fn machine(dim: usize, parts: usize, classes: usize, anchors: usize) -> SimMachine {
        SimMachine::new(
            TildaConfig::new(dim, parts, classes, anchors, 1).unwrap(),
            StageFormats::PAPER,
            Arc::new(ReciprocalLut::default()),
        )
        .unwrap()
    }

    fn q(values: &[f64]) -> Vec<i32> {
        quantize_features(values, StageFormats::PAPER.feature_anchor).unwrap()
    }

    #[test]
    fn learn_takes_k_plus_three_cycles() {
        for k in [1, 2, 30] {
            let mut m = machine(4, 2, 3, k);
            assert_eq!(m.sim_learn(&q(&[0.5, 1.0, -1.0, 2.0]), 1).unwrap(), k as u64 + 3);
            assert_eq!(m.sim_learn(&q(&[0.25, 1.0, -1.0, 2.0]), 2).unwrap(), k as u64 + 3);
        }
    }

    #[test]
    fn first_learn_matches_reference() {
        let mut m = machine(4, 2, 3, 2);
        let x = [0.3, -1.7, 2.2, 0.01];
        m.sim_learn(&q(&x), 2).unwrap();
        let mut reference = QuantizedBank::new(*m.config(), StageFormats::PAPER, Arc::clone(m.lut())).unwrap();
        reference.learn_one(&FeatureVector::labeled(x.to_vec(), 2, 0)).unwrap();
        for p in 0..2 {
            let block = &m.blocks()[p];
            assert_eq!(block.anchor_row(2 * 2), reference.anchor(2, p, 0));
            assert_eq!(block.counter(4), 1);
            assert_eq!(block.counters().iter().sum::<u32>(), 1);
            for (&a, &v) in block.anchor_row(4).iter().zip(&x[2 * p..2 * p + 2]) {
                assert!((a as f64 * 2f64.powi(-13) - v).abs() <= 2f64.powi(-9));
            }
        }
    }

    #[test]
    fn degenerate_classify_takes_one_cycle() {
        let mut m = machine(2, 1, 1, 1);
        m.sim_learn(&q(&[1.0, 1.0]), 0).unwrap();
        m.set_mode(LpMode::Process).unwrap();
        assert_eq!(m.sim_classify(&[q(&[5.0, -3.0])]).unwrap(), (0, 1));
    }

    #[test]
    fn classify_cycles_scale_with_versions() {
        let mut m = machine(4, 2, 3, 5);
        m.sim_learn(&q(&[1.0; 4]), 0).unwrap();
        m.set_mode(LpMode::Process).unwrap();
        let v = q(&[0.0; 4]);
        for r in 1..4 {
            let versions = vec![v.clone(); r];
            assert_eq!(m.sim_classify(&versions).unwrap().1, (3 * 5 * r) as u64);
        }
    }

    #[test]
    fn protocol_errors() {
        let mut m = machine(2, 1, 2, 1);
        assert!(matches!(m.step(), Err(Error::Protocol(_))));
        assert!(matches!(m.sim_classify(&[q(&[0.0, 0.0])]), Err(Error::Protocol(_))));
        m.set_mode(LpMode::Process).unwrap();
        assert!(matches!(m.sim_learn(&q(&[0.0, 0.0]), 0), Err(Error::Protocol(_))));
        assert!(matches!(m.sim_classify(&[q(&[0.0, 0.0])]), Err(Error::Untrained(_))));
        m.set_mode(LpMode::Learn).unwrap();
        m.begin_learn(&q(&[0.0, 0.0]), 1).unwrap();
        assert!(matches!(m.set_mode(LpMode::Process), Err(Error::Protocol(_))));
        assert!(matches!(m.begin_learn(&q(&[0.0, 0.0]), 1), Err(Error::Protocol(_))));
        while m.step().unwrap() != StepOutcome::Learned {}
        assert!(m.is_idle());
        assert!(matches!(m.sim_learn(&q(&[0.0]), 0), Err(Error::Config(_))));
        assert!(matches!(m.sim_learn(&q(&[0.0, 0.0]), 2), Err(Error::Usage(_))));
        assert!(matches!(m.sim_learn(&[1 << 20, 0], 0), Err(Error::Numeric(_))));
    }

    #[test]
    fn address_streams() {
        let mut m = machine(2, 1, 4, 3);
        m.begin_learn(&q(&[0.0, 0.0]), 2).unwrap();
        assert_eq!(m.address_generator().modulo_in(), 3);
        let mut seen = Vec::new();
        for _ in 0..3 {
            seen.push(m.address_generator().address());
            m.step().unwrap();
        }
        assert_eq!(seen, vec![6, 7, 8]);
        while m.step().unwrap() != StepOutcome::Learned {}

        m.set_mode(LpMode::Process).unwrap();
        m.begin_classify(&[q(&[0.0, 0.0])]).unwrap();
        assert_eq!(m.address_generator().modulo_in(), 12);
        assert_eq!(m.address_generator().lp(), LpMode::Process);
        let mut seen = Vec::new();
        loop {
            seen.push(m.address_generator().address());
            if let StepOutcome::Classified(c) = m.step().unwrap() {
                assert_eq!(c, 2);
                break;
            }
        }
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn trace_lines_are_stable() {
        let mut m = machine(2, 2, 1, 1);
        m.enable_trace();
        m.sim_learn(&q(&[1.0, 2.0]), 0).unwrap();
        let text = render_trace(&m.take_trace());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TraceRecord::HEADER);
        // 4 cycles x 2 blocks
        assert_eq!(lines.len(), 1 + 8);
        // First beat: distance from (1.0) to the zero anchor is 1.0 at 8 fractional bits.
        assert_eq!(lines[1], "1 0 0 256 0 1");
        assert_eq!(lines[2], "1 1 0 1024 0 1");
        assert!(m.take_trace().is_empty());
    }
}
