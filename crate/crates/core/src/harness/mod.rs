//! Experiment orchestration: declarative configs with presets, seeded
//! replicate studies, CSV emission, and the runtime invariant suite.

pub mod config;
pub mod output;
pub mod studies;
pub mod verify;

pub use config::{BandwidthMode, ExperimentConfig, PartialConfig};
pub use studies::{
    run_estimate, run_fluctuation_study, run_mise_study, run_variance_study, EstimateRun,
    FluctRow, MetricsRow, MiseRow, MiseStudy, VarRow,
};
