//! One streaming training pass through every requested variant, then
//! evaluation of the test groups.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dataset::{DatasetFile, DatasetRecord};
use crate::error::{Error, Result};
use crate::fixedpoint::{ReciprocalLut, StageFormats};
use crate::hwsim::{resource_report_with, timing_report, CycleReport, LpMode, ResourceReport, SimMachine};
use crate::model::{quantize_features, AnchorBank, FeatureVector, QuantizedBank, TildaConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    FloatReference,
    QuantizedReference,
    HwSim,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::FloatReference, Variant::QuantizedReference, Variant::HwSim];

    pub fn name(self) -> &'static str {
        match self {
            Variant::FloatReference => "float_reference",
            Variant::QuantizedReference => "quantized_reference",
            Variant::HwSim => "hwsim",
        }
    }

    /// Parse a comma-separated list such as `float,quant,sim`.
    pub fn parse_list(text: &str) -> Result<Vec<Variant>> {
        let mut out: Vec<Variant> = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let v = item.parse()?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" | "float_reference" => Ok(Variant::FloatReference),
            "quant" | "quantized" | "quantized_reference" => Ok(Variant::QuantizedReference),
            "sim" | "hwsim" => Ok(Variant::HwSim),
            other => Err(Error::usage(format!("unknown variant {other:?} (expected float, quant or sim)"))),
        }
    }
}

/// Order in which the training records are streamed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamOrder {
    AsStored,
    Shuffled(u64),
    /// All of class 0, then all of class 1, and so on; stable within a class.
    ClassSorted,
}

impl StreamOrder {
    pub fn indices(self, records: &[DatasetRecord]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..records.len()).collect();
        match self {
            StreamOrder::AsStored => {}
            StreamOrder::Shuffled(seed) => idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
            StreamOrder::ClassSorted => idx.sort_by_key(|&i| records[i].label),
        }
        idx
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub config: TildaConfig,
    pub variants: Vec<Variant>,
    pub order: StreamOrder,
    pub frequency_hz: f64,
    pub formats: StageFormats,
    /// Shared reciprocal table; built from `formats` when absent.
    pub lut: Option<Arc<ReciprocalLut>>,
}

impl ExperimentOptions {
    pub fn new(config: TildaConfig, variants: Vec<Variant>, order: StreamOrder) -> Self {
        ExperimentOptions {
            config,
            variants,
            order,
            frequency_hz: 208e6,
            formats: StageFormats::PAPER,
            lut: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantOutcome {
    pub variant: Variant,
    pub accuracy: f64,
    pub correct: u64,
    pub total: u64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    /// Final class of every test group, in file order.
    pub predictions: Vec<usize>,
    /// Simulated cycles spent learning and classifying (hwsim only).
    pub learn_cycles: Option<u64>,
    pub classify_cycles: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: TildaConfig,
    /// Accuracy and confusion of the first requested variant.
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    pub per_variant: Vec<VariantOutcome>,
    pub timing: CycleReport,
    pub resources: ResourceReport,
}

impl ExperimentResult {
    pub fn variant(&self, v: Variant) -> Option<&VariantOutcome> {
        self.per_variant.iter().find(|o| o.variant == v)
    }
}

enum Trainer {
    Float(AnchorBank),
    Quant(QuantizedBank),
    Sim(Box<SimMachine>, u64),
}

fn check_header(ds: &DatasetFile, cfg: &TildaConfig, what: &str) -> Result<()> {
    if ds.dim != cfg.dim || ds.classes != cfg.classes {
        return Err(Error::config(format!(
            "{what} set has T={} C={}, config expects T={} C={}",
            ds.dim, ds.classes, cfg.dim, cfg.classes
        )));
    }
    Ok(())
}

fn to_f64(values: &[f32]) -> Vec<f64> {
    values.iter().map(|&v| v as f64).collect()
}

pub fn run_experiment(train: &DatasetFile, test: &DatasetFile, opts: &ExperimentOptions) -> Result<ExperimentResult> {
    run_experiment_traced(train, test, opts, None)
}

/// As [`run_experiment`], additionally writing the simulator's cycle trace
/// (learning and classification) to `trace` when the hwsim variant runs.
pub fn run_experiment_traced(
    train: &DatasetFile,
    test: &DatasetFile,
    opts: &ExperimentOptions,
    mut trace: Option<&mut dyn Write>,
) -> Result<ExperimentResult> {
    let cfg = opts.config;
    cfg.validate()?;
    check_header(train, &cfg, "training")?;
    check_header(test, &cfg, "test")?;
    let groups = test.groups();
    if let Some(g) = groups.iter().find(|g| g.len() < cfg.versions) {
        return Err(Error::config(format!(
            "test group {} has {} versions, config asks for R={}",
            g[0].group,
            g.len(),
            cfg.versions
        )));
    }
    let timing = timing_report(&cfg, opts.frequency_hz)?;
    let fa = opts.formats.feature_anchor;
    let needs_lut = opts.variants.iter().any(|&v| v != Variant::FloatReference);
    let lut = match (&opts.lut, needs_lut) {
        (Some(l), _) => Arc::clone(l),
        (None, true) => Arc::new(ReciprocalLut::new(opts.formats.counter_max() as usize, ReciprocalLut::DEFAULT_FORMAT)?),
        (None, false) => Arc::new(ReciprocalLut::new(1, ReciprocalLut::DEFAULT_FORMAT)?),
    };

    let mut trainers = opts
        .variants
        .iter()
        .map(|v| {
            Ok(match v {
                Variant::FloatReference => Trainer::Float(AnchorBank::new(cfg)?),
                Variant::QuantizedReference => Trainer::Quant(QuantizedBank::new(cfg, opts.formats, Arc::clone(&lut))?),
                Variant::HwSim => {
                    let mut m = SimMachine::new(cfg, opts.formats, Arc::clone(&lut))?;
                    if trace.is_some() {
                        m.enable_trace();
                    }
                    Trainer::Sim(Box::new(m), 0)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut flush_trace = |m: &mut SimMachine| -> Result<()> {
        if let Some(w) = trace.as_mut() {
            for r in m.take_trace() {
                writeln!(w, "{r}")?;
            }
        }
        Ok(())
    };

    for i in opts.order.indices(&train.records) {
        let rec = &train.records[i];
        let x = FeatureVector::labeled(to_f64(&rec.values), rec.label as usize, rec.group as u64);
        let q = if needs_lut { Some(quantize_features(&x.values, fa)?) } else { None };
        for t in &mut trainers {
            match t {
                Trainer::Float(b) => {
                    b.learn_one(&x)?;
                }
                Trainer::Quant(b) => {
                    b.learn_quantized(q.as_ref().expect("quantized"), rec.label as usize)?;
                }
                Trainer::Sim(m, cycles) => {
                    *cycles += m.sim_learn(q.as_ref().expect("quantized"), rec.label as usize)?;
                    flush_trace(m)?;
                }
            }
        }
    }

    let mut per_variant = Vec::with_capacity(trainers.len());
    for (t, &variant) in trainers.iter_mut().zip(&opts.variants) {
        let mut confusion = vec![vec![0u64; cfg.classes]; cfg.classes];
        let mut predictions = Vec::with_capacity(groups.len());
        let mut classify_cycles = 0;
        if let Trainer::Sim(m, _) = t {
            m.set_mode(LpMode::Process)?;
        }
        for g in &groups {
            let g = &g[..cfg.versions];
            let predicted = match t {
                Trainer::Float(b) => {
                    let xs: Vec<FeatureVector> = g
                        .iter()
                        .map(|r| FeatureVector::labeled(to_f64(&r.values), r.label as usize, r.group as u64))
                        .collect();
                    b.predict_group(&xs)?.final_class
                }
                Trainer::Quant(b) => {
                    let xs: Vec<FeatureVector> = g
                        .iter()
                        .map(|r| FeatureVector::labeled(to_f64(&r.values), r.label as usize, r.group as u64))
                        .collect();
                    b.predict_group(&xs)?.final_class
                }
                Trainer::Sim(m, _) => {
                    let qs = g
                        .iter()
                        .map(|r| quantize_features(&to_f64(&r.values), fa))
                        .collect::<Result<Vec<_>>>()?;
                    let (c, cycles) = m.sim_classify(&qs)?;
                    classify_cycles += cycles;
                    flush_trace(m)?;
                    c
                }
            };
            confusion[g[0].label as usize][predicted] += 1;
            predictions.push(predicted);
        }
        let total = predictions.len() as u64;
        let correct: u64 = (0..cfg.classes).map(|c| confusion[c][c]).sum();
        let (learn_cycles, classify_cycles) = match t {
            Trainer::Sim(_, learn) => (Some(*learn), Some(classify_cycles)),
            _ => (None, None),
        };
        per_variant.push(VariantOutcome {
            variant,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            correct,
            total,
            confusion,
            predictions,
            learn_cycles,
            classify_cycles,
        });
    }

    let (accuracy, confusion) = per_variant
        .first()
        .map(|o| (o.accuracy, o.confusion.clone()))
        .unwrap_or((0.0, vec![vec![0; cfg.classes]; cfg.classes]));
    Ok(ExperimentResult {
        config: cfg,
        accuracy,
        confusion,
        per_variant,
        timing,
        resources: resource_report_with(&cfg, &opts.formats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{gen_synthetic, SyntheticSpec};

    fn rec(label: u32, group: u32, values: &[f32]) -> DatasetRecord {
        DatasetRecord {
            label,
            group,
            values: values.to_vec(),
        }
    }

    #[test]
    fn variant_names() {
        assert_eq!(
            Variant::parse_list("float, quant,sim,float").unwrap(),
            vec![Variant::FloatReference, Variant::QuantizedReference, Variant::HwSim]
        );
        assert!(Variant::parse_list("fpga").is_err());
        assert_eq!(Variant::HwSim.to_string(), "hwsim");
    }

    #[test]
    fn memorizes_one_example_per_class() {
        let train = DatasetFile::new(
            4,
            3,
            vec![rec(0, 0, &[1.0, 0.0, 1.0, 0.0]), rec(1, 1, &[0.0, 1.0, 0.0, 1.0]), rec(2, 2, &[-1.0, -1.0, 1.0, 1.0])],
        )
        .unwrap();
        let cfg = TildaConfig::new(4, 2, 3, 2, 1).unwrap();
        let opts = ExperimentOptions::new(cfg, Variant::ALL.to_vec(), StreamOrder::Shuffled(4));
        let r = run_experiment(&train, &train, &opts).unwrap();
        for o in &r.per_variant {
            assert_eq!(o.accuracy, 1.0, "{}", o.variant);
        }
        let sim = r.variant(Variant::HwSim).unwrap();
        assert_eq!(sim.learn_cycles, Some(3 * 5));
        assert_eq!(sim.classify_cycles, Some(3 * 6));
    }

    #[test]
    fn confusion_rows_sum_to_group_counts() {
        let spec = SyntheticSpec {
            classes: 4,
            dim: 8,
            train_per_class: 10,
            test_per_class: 6,
            versions: 3,
            ..SyntheticSpec::default()
        };
        let data = gen_synthetic(&spec).unwrap();
        let cfg = TildaConfig::new(8, 2, 4, 3, 3).unwrap();
        let opts = ExperimentOptions::new(cfg, Variant::ALL.to_vec(), StreamOrder::AsStored);
        let r = run_experiment(&data.train, &data.test, &opts).unwrap();
        for o in &r.per_variant {
            assert!(o.confusion.iter().all(|row| row.iter().sum::<u64>() == 6));
            assert_eq!(o.total, 24);
        }
        assert_eq!(
            r.variant(Variant::QuantizedReference).unwrap().predictions,
            r.variant(Variant::HwSim).unwrap().predictions
        );
    }

    #[test]
    fn mismatches_are_config_errors() {
        let ds = DatasetFile::new(2, 2, vec![rec(0, 0, &[0.0, 0.0]), rec(1, 1, &[1.0, 1.0])]).unwrap();
        let opts = |t, r| ExperimentOptions::new(TildaConfig::new(t, 1, 2, 1, r).unwrap(), vec![Variant::FloatReference], StreamOrder::AsStored);
        assert!(matches!(run_experiment(&ds, &ds, &opts(4, 1)), Err(Error::Config(_))));
        assert!(matches!(run_experiment(&ds, &ds, &opts(2, 2)), Err(Error::Config(_))));
        let empty = DatasetFile::new(2, 2, vec![]).unwrap();
        assert!(matches!(run_experiment(&empty, &ds, &opts(2, 1)), Err(Error::Untrained(_))));
    }

    #[test]
    fn class_sorted_order_is_stable() {
        let rs = vec![rec(1, 0, &[0.0]), rec(0, 1, &[0.0]), rec(1, 2, &[0.0]), rec(0, 3, &[0.0])];
        assert_eq!(StreamOrder::ClassSorted.indices(&rs), vec![1, 3, 0, 2]);
        let a = StreamOrder::Shuffled(9).indices(&rs);
        assert_eq!(a, StreamOrder::Shuffled(9).indices(&rs));
    }
}
