//! Datasets, experiment orchestration, replay checks and reports.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod replay;
pub mod report;
pub mod synthetic;

pub use config::{parse_key_values, RunConfig};
pub use dataset::{DatasetFile, DatasetRecord};
pub use experiment::{
    run_experiment, run_experiment_traced, ExperimentOptions, ExperimentResult, StreamOrder, Variant, VariantOutcome,
};
pub use replay::{replay_verify, Assignment, ReplayReport, TrainingLog};
pub use report::{render, sig6, ReportFormat};
pub use synthetic::{gen_synthetic, SyntheticData, SyntheticSpec};
