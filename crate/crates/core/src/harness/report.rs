//! Rendering of experiment results.
//!
//! CSV columns, one row per variant:
//! `variant,accuracy,correct,total,learn_cycles,classify_cycles`
//! (cycle columns are empty except for hwsim). Real numbers are printed
//! with 6 significant digits in every format.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::{json, Value};

use super::experiment::ExperimentResult;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    JsonLines,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json-lines" | "jsonl" => Ok(ReportFormat::JsonLines),
            other => Err(Error::usage(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "variant,accuracy,correct,total,learn_cycles,classify_cycles";

/// `x` rounded to 6 significant digits, in fixed notation for moderate
/// magnitudes and scientific notation otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..16).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn num(x: f64) -> Value {
    sig6(x).parse::<f64>().map(Value::from).unwrap_or(Value::Null)
}

fn opt(v: Option<u64>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

pub fn render(result: &ExperimentResult, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(result),
        ReportFormat::Csv => render_csv(result),
        ReportFormat::JsonLines => render_json_lines(result),
    }
}

fn render_csv(r: &ExperimentResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for o in &r.per_variant {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            o.variant,
            sig6(o.accuracy),
            o.correct,
            o.total,
            opt(o.learn_cycles),
            opt(o.classify_cycles)
        );
    }
    s
}

fn render_text(r: &ExperimentResult) -> String {
    let c = &r.config;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "config: T={} P={} C={} k={} R={} metric={}",
        c.dim,
        c.parts,
        c.classes,
        c.anchors,
        c.versions,
        c.metric.name()
    );
    for o in &r.per_variant {
        let _ = write!(s, "{}: accuracy {} ({}/{})", o.variant, sig6(o.accuracy), o.correct, o.total);
        if let (Some(l), Some(p)) = (o.learn_cycles, o.classify_cycles) {
            let _ = write!(s, ", learn cycles {l}, classify cycles {p}");
        }
        s.push('\n');
        let _ = writeln!(s, "  confusion (rows true, columns predicted):");
        for row in &o.confusion {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "    {}", cells.join(" "));
        }
    }
    let t = &r.timing;
    let _ = writeln!(
        s,
        "timing: learn {} cycles ({} ns), classify {} cycles ({} ns) at {} MHz",
        t.learn_cycles_per_vector,
        sig6(t.learn_latency_ns),
        t.classify_cycles,
        sig6(t.classify_latency_ns),
        sig6(t.frequency_hz / 1e6)
    );
    let m = &r.resources;
    let _ = writeln!(
        s,
        "resources: anchor memory {} bits, counter memory {} bits, total {} bits, DSP {}",
        m.anchor_memory_bits, m.counter_memory_bits, m.total_memory_bits, m.dsp_count
    );
    s
}

fn render_json_lines(r: &ExperimentResult) -> String {
    let mut s = String::new();
    for o in &r.per_variant {
        let line = json!({
            "variant": o.variant.name(),
            "accuracy": num(o.accuracy),
            "correct": o.correct,
            "total": o.total,
            "learn_cycles": o.learn_cycles,
            "classify_cycles": o.classify_cycles,
            "confusion": o.confusion,
        });
        let _ = writeln!(s, "{line}");
    }
    let t = &r.timing;
    let m = &r.resources;
    let summary = json!({
        "learn_cycles_per_vector": t.learn_cycles_per_vector,
        "classify_cycles": t.classify_cycles,
        "frequency_hz": num(t.frequency_hz),
        "learn_latency_ns": num(t.learn_latency_ns),
        "classify_latency_ns": num(t.classify_latency_ns),
        "anchor_memory_bits": m.anchor_memory_bits,
        "counter_memory_bits": m.counter_memory_bits,
        "total_memory_bits": m.total_memory_bits,
        "dsp_count": m.dsp_count,
    });
    let _ = writeln!(s, "{summary}");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::{run_experiment, ExperimentOptions, StreamOrder, Variant};
    use crate::harness::synthetic::{gen_synthetic, SyntheticSpec};
    use crate::model::TildaConfig;

    fn result(variants: Vec<Variant>) -> ExperimentResult {
        let spec = SyntheticSpec {
            classes: 3,
            dim: 8,
            train_per_class: 8,
            test_per_class: 5,
            ..SyntheticSpec::default()
        };
        let d = gen_synthetic(&spec).unwrap();
        let cfg = TildaConfig::new(8, 2, 3, 2, 1).unwrap();
        run_experiment(&d.train, &d.test, &ExperimentOptions::new(cfg, variants, StreamOrder::Shuffled(1))).unwrap()
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(158.653846), "158.654");
        assert_eq!(sig6(1442.307692), "1442.31");
        assert_eq!(sig6(0.875), "0.875000");
        assert_eq!(sig6(9.9999996), "10.0000");
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(2.5e-9), "2.50000e-9");
        assert_eq!(sig6(208e6), "208000000");
    }

    #[test]
    fn empty_variant_set_is_header_only() {
        let r = result(vec![]);
        assert_eq!(render(&r, ReportFormat::Csv), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rendering_is_deterministic_and_consistent() {
        let r = result(Variant::ALL.to_vec());
        for f in [ReportFormat::Text, ReportFormat::Csv, ReportFormat::JsonLines] {
            assert_eq!(render(&r, f), render(&r, f));
        }
        let csv = render(&r, ReportFormat::Csv);
        for (line, o) in csv.lines().skip(1).zip(&r.per_variant) {
            let fields: Vec<&str> = line.split(',').collect();
            let diag: u64 = (0..3).map(|c| o.confusion[c][c]).sum();
            let total: u64 = o.confusion.iter().flatten().sum();
            assert_eq!(fields[1], sig6(diag as f64 / total as f64));
        }
        let lines: Vec<Value> = render(&r, ReportFormat::JsonLines)
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2]["variant"], "hwsim");
        assert!(render(&r, ReportFormat::Text).contains("resources: anchor memory 864 bits"));
        assert!("yaml".parse::<ReportFormat>().is_err());
    }
}
