//! Incremental anchor-vector classification with a bit-exact fixed-point
//! reference and a cycle-stepped model of its accelerator.
//!
//! - [`model`]: floating-point and quantized classifiers and the vote stages.
//! - [`fixedpoint`]: Q-format arithmetic with saturation and the reciprocal table.
//! - [`hwsim`]: the cycle-stepped datapath, timing and resource figures.
//! - [`harness`]: datasets, experiments, replay checks and reports.

pub mod error;
pub mod fixedpoint;
pub mod harness;
pub mod hwsim;
pub mod model;

pub use error::{Error, Result};
pub use fixedpoint::{Fixed, QFormat, ReciprocalLut, StageFormats};
pub use hwsim::{
    classify_cycles, learn_cycles, resource_report, timing_report, CycleReport, LpMode, ResourceReport, SimMachine,
    StepOutcome, TraceRecord,
};
pub use model::{AnchorBank, FeatureVector, Metric, Prediction, QuantizedBank, TildaConfig};
