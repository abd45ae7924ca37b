//! Experiment orchestration: configuration, Monte Carlo runner, metrics,
//! and plot emission.

pub mod config;
pub mod metrics;
pub mod plot;
pub mod runner;

pub use config::{
    dbm_to_watts, ConfigError, EstimatorKind, EstimatorSelection, ExperimentConfig,
};
pub use metrics::{nmse, pilot_overhead, MetricsRecord, PilotOverhead};
pub use plot::{emit_plots, FigureKind};
pub use runner::{all_trials_failed, run_experiment, HarnessError};
