//! Experiment harness for the federated-learning simulator.
//!
//! Parses a TOML config, wires dataset -> partition -> protocol loop ->
//! transfer ledger, and emits per-round metrics plus an end-of-run
//! summary. Everything is a pure function of the config file.

pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;

pub use config::{DataSettings, EvalSettings, ExperimentConfig, ModelSettings, DATA_DIR_ENV};
pub use error::{CliError, Result};
pub use experiment::{
    rounds_to_target, run_experiment, run_experiment_with, ExperimentOutput, ExperimentSummary,
    RoundRecord,
};
pub use metrics::{emit_metrics, parse_metrics_csv, write_summary, MetricsWriter};
