//! Experiment harness around `pumpout-core`: datasets, configs, CSV logs,
//! `γ` sweeps and charts.

pub mod chart;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod idx;
pub mod metrics_csv;
pub mod sweep;

pub use error::{LabError, Result};
