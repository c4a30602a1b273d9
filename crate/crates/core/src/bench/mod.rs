//! Experiment harness: configuration files, metrics, sweeps, derivative
//! validation and the preset tables.

pub mod config;
pub mod metrics;
pub mod run;
pub mod tables;
pub mod validate;

pub use config::{RunConfig, SweepConfig};
pub use metrics::MetricsRow;
pub use run::{run, sweep, to_csv, RunOutput};
pub use tables::tables;
pub use validate::{validate, ValidationReport};
