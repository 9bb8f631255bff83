//! Experiment harness: JSON experiment configs, evaluation and sweep runs,
//! CSV/JSON reports and SVG charts.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::HarnessError;
