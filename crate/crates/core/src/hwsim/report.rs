//! Closed-form timing and resource figures for a configuration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::StageFormats;
use crate::model::TildaConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub learn_cycles_per_vector: u64,
    pub classify_cycles: u64,
    pub frequency_hz: f64,
    pub learn_latency_ns: f64,
    pub classify_latency_ns: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub anchor_memory_bits: u64,
    pub counter_memory_bits: u64,
    pub total_memory_bits: u64,
    pub dsp_count: u64,
}

/// `k` scan cycles, then multiply, add and divide.
pub fn learn_cycles(config: &TildaConfig) -> u64 {
    config.anchors as u64 + 3
}

/// One address per cycle over all `C * k` anchors, for each of `R` versions.
pub fn classify_cycles(config: &TildaConfig) -> u64 {
    (config.classes * config.anchors * config.versions) as u64
}

pub fn timing_report(config: &TildaConfig, frequency_hz: f64) -> Result<CycleReport> {
    config.validate()?;
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::usage(format!("clock frequency must be positive, got {frequency_hz}")));
    }
    let learn = learn_cycles(config);
    let classify = classify_cycles(config);
    let ns = |cycles: u64| cycles as f64 / frequency_hz * 1e9;
    Ok(CycleReport {
        learn_cycles_per_vector: learn,
        classify_cycles: classify,
        frequency_hz,
        learn_latency_ns: ns(learn),
        classify_latency_ns: ns(classify),
    })
}

pub fn resource_report(config: &TildaConfig) -> ResourceReport {
    resource_report_with(config, &StageFormats::PAPER)
}

/// Anchor memory holds `C * k` rows of `T` words; the counter memory one
/// word per (class, slot) in each of the `P` blocks. One multiplier per
/// feature dimension for distances and one per block for the
/// multiply/divide stage.
pub fn resource_report_with(config: &TildaConfig, formats: &StageFormats) -> ResourceReport {
    let slots = (config.classes * config.anchors) as u64;
    let anchor_memory_bits = formats.feature_anchor.total_bits() as u64 * slots * config.dim as u64;
    let counter_memory_bits = formats.address_counter.total_bits() as u64 * slots * config.parts as u64;
    ResourceReport {
        anchor_memory_bits,
        counter_memory_bits,
        total_memory_bits: anchor_memory_bits + counter_memory_bits,
        dsp_count: (config.dim + config.parts) as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_config(versions: usize) -> TildaConfig {
        TildaConfig::new(2048, 16, 10, 30, versions).unwrap()
    }

    #[test]
    fn table_configuration() {
        let r = resource_report(&table_config(1));
        assert_eq!(r.dsp_count, 2064);
        assert_eq!(r.anchor_memory_bits, 11_059_200);
        assert_eq!(r.counter_memory_bits, 86_400);
        assert_eq!(r.total_memory_bits, 11_145_600);

        let t = timing_report(&table_config(1), 208e6).unwrap();
        assert_eq!(t.learn_cycles_per_vector, 33);
        assert_eq!(t.classify_cycles, 300);
        assert!((t.learn_latency_ns - 158.653_846).abs() < 1e-5);
        assert!((t.classify_latency_ns - 1442.307_692).abs() < 1e-5);
    }

    #[test]
    fn small_formulas() {
        let cfg = TildaConfig::new(8, 8, 1, 1, 1).unwrap();
        let r = resource_report(&cfg);
        assert_eq!(r.dsp_count, 16);
        assert_eq!(r.anchor_memory_bits, 18 * 8);
        assert_eq!(learn_cycles(&cfg), 4);
        assert_eq!(classify_cycles(&cfg), 1);
    }

    #[test]
    fn unit_frequency_gives_cycles() {
        let cfg = TildaConfig::new(12, 3, 7, 5, 4).unwrap();
        let t = timing_report(&cfg, 1e9).unwrap();
        assert_eq!(t.learn_latency_ns, t.learn_cycles_per_vector as f64);
        assert_eq!(t.classify_latency_ns, t.classify_cycles as f64);
        assert_eq!(t.classify_cycles, 7 * 5 * 4);
    }

    #[test]
    fn rejects_bad_frequency() {
        let cfg = table_config(1);
        for f in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(timing_report(&cfg, f), Err(Error::Usage(_))));
        }
    }
}
