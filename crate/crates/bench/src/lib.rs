//! Fixtures shared by the datapath benchmarks.

use std::sync::Arc;

use tilda::harness::{gen_synthetic, DatasetFile, SyntheticSpec};
use tilda::model::quantize_features;
use tilda::{AnchorBank, LpMode, QuantizedBank, ReciprocalLut, SimMachine, StageFormats, TildaConfig};

/// The desk configuration: T=64, P=8, C=10, k=10.
pub fn desk_config(versions: usize) -> TildaConfig {
    TildaConfig::new(64, 8, 10, 10, versions).expect("valid configuration")
}

pub fn desk_data() -> (DatasetFile, DatasetFile) {
    let d = gen_synthetic(&SyntheticSpec::default()).expect("default spec is valid");
    (d.train, d.test)
}

pub fn trained_bank(train: &DatasetFile) -> AnchorBank {
    let mut bank = AnchorBank::new(desk_config(1)).expect("valid configuration");
    for r in &train.records {
        bank.learn_one(&r.to_feature_vector()).expect("record fits");
    }
    bank
}

pub fn trained_quantized(train: &DatasetFile, lut: &Arc<ReciprocalLut>) -> QuantizedBank {
    let mut bank = QuantizedBank::new(desk_config(1), StageFormats::PAPER, Arc::clone(lut)).expect("valid");
    for r in &train.records {
        bank.learn_one(&r.to_feature_vector()).expect("record fits");
    }
    bank
}

/// A machine trained on `train` and switched to process mode.
pub fn trained_machine(train: &DatasetFile, lut: &Arc<ReciprocalLut>) -> SimMachine {
    let mut m = SimMachine::new(desk_config(1), StageFormats::PAPER, Arc::clone(lut)).expect("valid");
    for r in &train.records {
        let x = r.to_feature_vector();
        let q = quantize_features(&x.values, StageFormats::PAPER.feature_anchor).expect("finite");
        m.sim_learn(&q, r.label as usize).expect("record fits");
    }
    m.set_mode(LpMode::Process).expect("idle");
    m
}
