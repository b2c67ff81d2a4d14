//! Experiment orchestration: configs and presets, multi-chain runs,
//! artifacts on disk and reports.

mod artifacts;
pub mod config;
mod experiment;
mod report;

pub use artifacts::MANIFEST;
pub use config::{
    AnalysisSpec, ExperimentConfig, GraphKind, GraphSpec, ModelSpec, PerAgent, SamplerSpec, GM_DESK_TICKS_PER_AGENT,
    GM_FULL_TICKS_PER_AGENT,
};
pub use experiment::{
    accuracy_report, data_root, prepare, rerun_from_manifest, run_chains, run_experiment, wasserstein_report,
    AccuracyBasis, AccuracyFinal, AccuracyPoint, AccuracyReport, ExperimentResult, InputFile, Problem, RunStatus,
    WassersteinEntry, WassersteinReport, DATA_ENV,
};
pub use report::{report, ReportFiles};
